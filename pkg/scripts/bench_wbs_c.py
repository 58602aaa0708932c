"""Time box-constrained word beam search against a large lexicon.

Decodes in-memory cards (about 8 letters, 3 frames per letter) against an
86,000-word pseudo-Polish lexicon split into alphabetized boxes.

    python scripts/bench_wbs_c.py --cards 1000 --lexicon-size 86000
"""

import argparse
import time

import numpy as np

from cardhtr.alphabet import polish_alphabet
from cardhtr.corpus import pseudo_polish_frequency_list
from cardhtr.decode import WBS_C, BeamParams, word_beam_search
from cardhtr.emissions import NoiseParams, synthesize_emissions
from cardhtr.harness import BoxIndex, make_boxes
from cardhtr.lexicon import build_lexicon, restrict_range


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cards", type=int, default=1000)
    ap.add_argument("--lexicon-size", type=int, default=86_000)
    ap.add_argument("--boxes", type=int, default=50)
    ap.add_argument("--beam-width", type=int, default=25)
    ap.add_argument("--epsilon", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    alphabet = polish_alphabet()
    t0 = time.perf_counter()
    lexicon = build_lexicon(pseudo_polish_frequency_list(args.lexicon_size, seed=args.seed).words, alphabet)
    boxes = make_boxes(lexicon, args.boxes)
    index = BoxIndex(boxes, alphabet)
    print(f"lexicon: {lexicon.word_count} words in {len(boxes)} boxes ({time.perf_counter() - t0:.1f}s)")

    rng = np.random.default_rng(args.seed)
    pool = [w for w in lexicon.words if 7 <= len(w) <= 9]
    words = [pool[i] for i in rng.choice(len(pool), size=args.cards)]
    cards = [synthesize_emissions(w, alphabet, NoiseParams(args.epsilon, seed=args.seed + i))
             for i, w in enumerate(words)]
    print(f"cards: {len(cards)}, mean T {np.mean([c.T for c in cards]):.1f}, C {len(alphabet)}")

    params = BeamParams(args.beam_width)
    # Restricted tries are built once per box, as the harness does.
    t0 = time.perf_counter()
    restricted = {b.box_id: restrict_range(lexicon, b) for b in boxes}
    t_restrict = time.perf_counter() - t0
    correct = 0
    t0 = time.perf_counter()
    for w, m in zip(words, cards):
        box = index.find(w)
        correct += word_beam_search(m, alphabet, restricted[box.box_id], params, decoder=WBS_C).label == w
    elapsed = time.perf_counter() - t0
    print(f"restricted tries built in {t_restrict:.1f}s")
    print(f"WBS-C: {elapsed:.1f}s total, {1000 * elapsed / len(cards):.2f} ms/card, accuracy {correct / len(cards):.4f}")


if __name__ == "__main__":
    main()
