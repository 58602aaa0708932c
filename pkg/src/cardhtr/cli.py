"""Command-line entry point: ``cardhtr <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data-validation failure,
3 decode-time error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus, harness, layout
from .alphabet import Alphabet, load_alphabet, polish_alphabet
from .decode import DECODERS, DecodeError
from .emissions import NoiseParams
from .lexicon import build_lexicon, load_boxes, load_words, save_boxes, save_words
from .metrics import EvalReport

log = logging.getLogger("cardhtr")

EXIT_USAGE, EXIT_DATA, EXIT_DECODE = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _alphabet(args) -> Alphabet:
    return load_alphabet(args.alphabet) if args.alphabet else polish_alphabet()


def cmd_gen_corpus(args) -> int:
    alphabet = _alphabet(args)
    if args.mode == "natural":
        if not args.freq_list:
            raise _Usage("--freq-list is required for --mode natural")
        freq = corpus.load_frequency_list(args.freq_list)
        freq.check(alphabet)
        words = corpus.sample_words(freq, args.n, args.seed)
    else:
        words = corpus.gen_diacritic_strings(alphabet, args.n, (args.len_min, args.len_max), args.seed)
    save_words(words, args.out)
    log.info("wrote %d words to %s", len(words), args.out)
    return 0


def cmd_gen_freq_list(args) -> int:
    freq = corpus.pseudo_polish_frequency_list(args.n_words, args.seed)
    corpus.save_frequency_list(freq, args.out)
    return 0


def cmd_make_boxes(args) -> int:
    lexicon = build_lexicon(load_words(args.lexicon), _alphabet(args))
    save_boxes(harness.make_boxes(lexicon, args.k), args.out)
    return 0


def cmd_build_dataset(args) -> int:
    alphabet = _alphabet(args)
    noise = NoiseParams(
        epsilon=args.noise,
        frames_per_char=args.frames_per_char,
        confusion_boost=args.confusion_boost,
        seed=args.seed,
        concentration=args.concentration,
    )
    cards = harness.build_dataset(
        load_words(args.words), load_boxes(args.boxes), noise, args.seed, args.out, alphabet,
        out_of_range_frac=args.out_of_range_frac,
    )
    log.info("wrote %d cards to %s", len(cards), args.out)
    return 0


def cmd_decode(args) -> int:
    alphabet = _alphabet(args)
    decoder = args.decoder.upper()
    manifest = Path(args.manifest)
    cards = harness.read_manifest(manifest)
    lexicon = build_lexicon(load_words(args.lexicon), alphabet) if args.lexicon else None
    boxes = load_boxes(args.boxes) if args.boxes else None
    if decoder in ("WBS", "WBS-C") and lexicon is None:
        raise _Usage(f"--lexicon is required for --decoder {args.decoder}")
    if decoder == "WBS-C" and boxes is None:
        raise _Usage("--boxes is required for --decoder wbs-c")
    config = harness.ExperimentConfig(
        decoder=decoder,
        beam_width=args.beam_width,
        fallback_on_empty_range=args.fallback_on_empty_range,
        fold_case=args.fold,
        workers=args.workers,
    )
    preds = harness.run_decode(cards, manifest.parent, config, alphabet, lexicon, boxes)
    harness.write_predictions(preds, args.out)
    failed = [p.card_id for p in preds if "empty_range" in p.flags and "fallback" not in p.flags]
    if failed:
        log.error("%d cards hit an empty box range, e.g. %s", len(failed), failed[0])
        return EXIT_DECODE
    return 0


def cmd_evaluate(args) -> int:
    preds = harness.read_predictions(args.pred)
    cards = harness.read_manifest(args.manifest)
    rep = harness.report(preds, cards, fold=args.fold)
    name = args.name or (preds[0].decoder if preds else "")
    text = rep.to_json(name=name) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.inputs:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        name = data.pop("name", Path(path).stem)
        try:
            rows.append((name, EvalReport(**data)))
        except TypeError as exc:
            raise harness.DataError(f"{path}: not an evaluation report ({exc})") from None
    if args.format == "json":
        out = json.dumps([{"name": n, **r.to_dict()} for n, r in rows], ensure_ascii=False, indent=2)
    else:
        out = harness.render_table(rows)
    sys.stdout.write(out + "\n")
    return 0


def cmd_select_box(args) -> int:
    lines = []
    for card_id, boxes in layout.load_card_boxes(args.boxes_jsonl):
        box = layout.select_index_box(boxes, args.strip_height, args.row_tolerance)
        lines.append(json.dumps({"card_id": card_id, "box": box.to_dict() if box else None}))
    Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return 0


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alphabet", help="alphabet file (default: built-in Polish)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cardhtr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-corpus", parents=[common], help="sample a synthetic word list")
    p.add_argument("--mode", choices=["natural", "diacritics"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--freq-list")
    p.add_argument("--len-min", type=int, default=2)
    p.add_argument("--len-max", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("gen-freq-list", parents=[common], help="write a pseudo-Polish frequency list")
    p.add_argument("--n-words", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_freq_list)

    p = sub.add_parser("make-boxes", parents=[common], help="partition a lexicon into alphabetized boxes")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_boxes)

    p = sub.add_parser("build-dataset", parents=[common], help="synthesize emission matrices for a word list")
    p.add_argument("--words", required=True)
    p.add_argument("--boxes", required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--frames-per-char", type=int, default=3)
    p.add_argument("--confusion-boost", type=float, default=5.0)
    p.add_argument("--concentration", type=float, default=NoiseParams.concentration)
    p.add_argument("--out-of-range-frac", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("decode", parents=[common], help="decode every card of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--decoder", choices=[d.lower() for d in DECODERS], required=True)
    p.add_argument("--beam-width", type=int, default=25)
    p.add_argument("--lexicon")
    p.add_argument("--boxes")
    p.add_argument("--fold", action="store_true")
    p.add_argument("--fallback-on-empty-range", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against the manifest")
    p.add_argument("--pred", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--fold", action="store_true")
    p.add_argument("--name")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", parents=[common], help="tabulate evaluation reports")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("select-box", parents=[common], help="pick each card's index-word box")
    p.add_argument("--boxes-jsonl", required=True)
    p.add_argument("--strip-height", type=int, default=300)
    p.add_argument("--row-tolerance", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select_box)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Usage as exc:
        parser.error(str(exc))
    except DecodeError as exc:
        log.error("%s", exc)
        return EXIT_DECODE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
