"""Forced-fit effect: misfiled cards inflate WBS-C's edit distance on errors.

Sweeps the fraction of cards filed under the wrong box and reports word
accuracy and average edit distance on misclassified words for BP and WBS-C.

    python scripts/forced_fit.py --fracs 0 0.05 0.1
"""

import argparse
import dataclasses
from pathlib import Path

from cardhtr.alphabet import polish_alphabet
from cardhtr.harness import StandardSetup, run_comparison


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work-dir", default="runs/forced_fit")
    ap.add_argument("--fracs", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.2])
    ap.add_argument("--n-words", type=int, default=2000)
    args = ap.parse_args()

    alphabet = polish_alphabet()
    print(f"{'frac':>6}  {'decoder':<6}  {'accuracy':>8}  {'edit|miscl':>10}")
    for frac in args.fracs:
        setup = dataclasses.replace(StandardSetup(), n_words=args.n_words, out_of_range_frac=frac)
        runs = run_comparison(setup, Path(args.work_dir) / f"frac-{frac:g}", alphabet, ("BP", "WBS-C"))
        for name, (rep, _) in runs.items():
            miscl = "-" if rep.avg_edit_misclassified is None else f"{rep.avg_edit_misclassified:.4f}"
            print(f"{frac:>6.2f}  {name:<6}  {rep.word_accuracy:>8.4f}  {miscl:>10}")


if __name__ == "__main__":
    main()
