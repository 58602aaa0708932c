"""Decoder comparison on the standard synthetic card collection.

Builds 5,000 noisy cards from a pseudo-Polish frequency list, decodes them
with BP, WBS and WBS-C and prints a table with the usual evaluation columns.

    python scripts/compare_decoders.py --work-dir runs/compare
"""

import argparse
import dataclasses
import logging
from pathlib import Path

from cardhtr.alphabet import polish_alphabet
from cardhtr.decode import DECODERS
from cardhtr.harness import StandardSetup, render_table, run_comparison


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work-dir", default="runs/compare")
    ap.add_argument("--decoders", nargs="+", default=["BP", "WBS", "WBS-C"], choices=DECODERS)
    ap.add_argument("--epsilon", type=float, default=StandardSetup.epsilon)
    ap.add_argument("--out-of-range-frac", type=float, default=StandardSetup.out_of_range_frac)
    ap.add_argument("--seed", type=int, default=StandardSetup.seed)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    setup = dataclasses.replace(
        StandardSetup(), epsilon=args.epsilon, out_of_range_frac=args.out_of_range_frac, seed=args.seed
    )
    runs = run_comparison(setup, Path(args.work_dir), polish_alphabet(), args.decoders, workers=args.workers)
    print(render_table([(name, rep) for name, (rep, _) in runs.items()]))


if __name__ == "__main__":
    main()
