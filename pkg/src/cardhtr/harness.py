"""Desk-scale decoding experiments: boxes, card datasets, decode runs and reports.

A dataset directory holds one EMAT file per card plus ``manifest.jsonl``.
Prediction files are JSON lines in manifest order, so a run is
byte-reproducible whatever the worker count.
"""

from __future__ import annotations

import bisect
import json
import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .alphabet import Alphabet, check_word
from .decode import (
    BP,
    BS,
    DECODERS,
    WBS,
    WBS_C,
    BeamParams,
    DecodeError,
    best_path,
    beam_search,
    word_beam_search,
)
from .emissions import EmatFormatError, NoiseParams, load_emat, save_emat, synthesize_emissions, validate
from .lexicon import BoxRange, Lexicon, restrict_range
from .metrics import EvalPair, EvalReport, evaluate

log = logging.getLogger(__name__)

MANIFEST = "manifest.jsonl"


class DataError(ValueError):
    """Inputs that fail validation: bad manifests, boxes, EMAT files."""


@dataclass(frozen=True)
class CardRecord:
    card_id: str
    gold_label: str
    box_id: str
    emat_path: str
    out_of_range: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


@dataclass(frozen=True)
class ExperimentConfig:
    decoder: str = WBS_C
    beam_width: int = 25
    noise: NoiseParams = NoiseParams()
    seed: int = 0
    fallback_on_empty_range: bool = False
    fold_case: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}; expected one of {DECODERS}")
        if self.beam_width < 1:
            raise ValueError("beam width must be >= 1")


@dataclass(frozen=True)
class Prediction:
    card_id: str
    pred: str
    score: float | None
    decoder: str
    flags: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {"card_id": self.card_id, "pred": self.pred, "score": self.score,
             "decoder": self.decoder, "flags": list(self.flags)},
            ensure_ascii=False,
        )


def make_boxes(lexicon: Lexicon, k: int) -> list[BoxRange]:
    """Split the sorted word list into ``k`` contiguous, near-equal spans."""
    n = lexicon.word_count
    if n == 0:
        raise ValueError("cannot partition an empty lexicon")
    if not 1 <= k <= n:
        raise ValueError(f"box count {k} outside [1, {n}]")
    words = lexicon.words
    width = len(str(k - 1))
    boxes = []
    start = 0
    for i in range(k):
        size = n // k + (i < n % k)
        boxes.append(BoxRange(f"box-{i:0{width}d}", words[start], words[start + size - 1]))
        start += size
    return boxes


class BoxIndex:
    """Lookup of the box whose range holds a word; boxes must not overlap."""

    def __init__(self, boxes: Sequence[BoxRange], alphabet: Alphabet):
        self.alphabet = alphabet
        for b in boxes:
            b.check(alphabet)
        self.boxes = sorted(boxes, key=lambda b: alphabet.sort_key(b.lo))
        self._lo = [alphabet.sort_key(b.lo) for b in self.boxes]
        self.by_id = {b.box_id: b for b in boxes}

    def find(self, word: str) -> BoxRange | None:
        key = self.alphabet.sort_key(word)
        i = bisect.bisect_right(self._lo, key) - 1
        if i >= 0 and key <= self.alphabet.sort_key(self.boxes[i].hi):
            return self.boxes[i]
        return None


def card_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence((seed, index)).generate_state(1, dtype=np.uint64)[0])


def build_dataset(
    words: Sequence[str],
    boxes: Sequence[BoxRange],
    noise: NoiseParams,
    seed: int,
    out_dir: str | Path,
    alphabet: Alphabet,
    out_of_range_frac: float = 0.0,
) -> list[CardRecord]:
    """Write one EMAT per word and a manifest; returns the card records.

    A fraction ``out_of_range_frac`` of cards is deliberately filed under a
    box whose range excludes the gold word.
    """
    out_dir = Path(out_dir)
    index = BoxIndex(boxes, alphabet)
    homes = []
    for w in words:
        check_word(w, alphabet)
        box = index.find(w)
        if box is None:
            raise DataError(f"word {w!r} is not covered by any box")
        homes.append(box)

    if not 0.0 <= out_of_range_frac <= 1.0:
        raise ValueError("out_of_range_frac must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_out = int(round(out_of_range_frac * len(words)))
    misfiled = set()
    if n_out:
        if len(index.boxes) < 2:
            raise DataError("out-of-range injection needs at least two boxes")
        misfiled = set(rng.choice(len(words), size=n_out, replace=False).tolist())

    try:
        (out_dir / "emat").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot write to {out_dir}: {exc}") from None
    digits = max(5, len(str(len(words) - 1)))
    records = []
    for i, (w, box) in enumerate(zip(words, homes)):
        if i in misfiled:
            others = [b for b in index.boxes if b.box_id != box.box_id]
            box = others[int(rng.integers(len(others)))]
        card_id = f"card-{i:0{digits}d}"
        rel = f"emat/{card_id}.emat"
        emat = synthesize_emissions(w, alphabet, replace(noise, seed=card_seed(seed, i)))
        save_emat(emat, out_dir / rel)
        records.append(CardRecord(card_id, w, box.box_id, rel, i in misfiled))
    write_manifest(records, out_dir / MANIFEST)
    return records


def write_manifest(records: Iterable[CardRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_manifest(path: str | Path) -> list[CardRecord]:
    records = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            card = CardRecord(
                str(rec["card_id"]), rec["gold_label"], str(rec["box_id"]), rec["emat_path"],
                bool(rec.get("out_of_range", False)),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad card record ({exc})") from None
        if not card.gold_label:
            raise DataError(f"{path}:{lineno}: empty gold label")
        if card.card_id in seen:
            raise DataError(f"{path}:{lineno}: duplicate card_id {card.card_id!r}")
        seen.add(card.card_id)
        records.append(card)
    return records


# Per-process decode context. Set before the pool forks so workers inherit
# the lexicon without pickling it.
_CTX: dict = {}


def _decode_card(card: CardRecord) -> Prediction:
    ctx = _CTX
    config: ExperimentConfig = ctx["config"]
    alphabet: Alphabet = ctx["alphabet"]
    path = Path(ctx["base"]) / card.emat_path
    try:
        emat = load_emat(path)
    except (OSError, EmatFormatError) as exc:
        raise DataError(f"card {card.card_id}: cannot load {path}: {exc}") from None
    report = validate(emat)
    if not report:
        raise DataError(f"card {card.card_id}: {report.message}")
    if not emat.matches(alphabet):
        raise DataError(f"card {card.card_id}: EMAT symbols differ from the alphabet")

    params = BeamParams(config.beam_width)
    flags: tuple[str, ...] = ()
    if config.decoder == BP:
        out = best_path(emat, alphabet)
    elif config.decoder == BS:
        out = beam_search(emat, alphabet, params)
    elif config.decoder == WBS:
        out = word_beam_search(emat, alphabet, ctx["lexicon"], params)
    else:
        sub = _restricted(card.box_id)
        if sub.word_count:
            out = word_beam_search(emat, alphabet, sub, params, decoder=WBS_C)
        elif config.fallback_on_empty_range:
            out = word_beam_search(emat, alphabet, ctx["lexicon"], params, decoder=WBS_C)
            flags = ("empty_range", "fallback")
        else:
            return Prediction(card.card_id, "", None, WBS_C, ("empty_range",))
    label = alphabet.fold(out.label) if config.fold_case else out.label
    return Prediction(card.card_id, label, out.score, out.decoder, flags)


def _restricted(box_id: str) -> Lexicon:
    cache = _CTX.setdefault("restricted", {})
    sub = cache.get(box_id)
    if sub is None:
        box = _CTX["boxes"].get(box_id)
        if box is None:
            raise DataError(f"unresolvable box_id {box_id!r}")
        sub = cache[box_id] = restrict_range(_CTX["lexicon"], box)
    return sub


def run_decode(
    cards: Sequence[CardRecord],
    base_dir: str | Path,
    config: ExperimentConfig,
    alphabet: Alphabet,
    lexicon: Lexicon | None = None,
    boxes: Sequence[BoxRange] | None = None,
) -> list[Prediction]:
    """Decode every card; results come back in manifest order."""
    if config.decoder in (WBS, WBS_C) and (lexicon is None or lexicon.word_count == 0):
        raise DecodeError(f"{config.decoder} needs a non-empty lexicon")
    box_map = {}
    if config.decoder == WBS_C:
        if boxes is None:
            raise DecodeError("WBS-C needs box ranges")
        box_map = {b.box_id: b for b in boxes}
        missing = sorted({c.box_id for c in cards} - box_map.keys())
        if missing:
            raise DataError(f"unresolvable box_id {missing[0]!r}")

    _CTX.clear()
    _CTX.update(config=config, alphabet=alphabet, lexicon=lexicon, boxes=box_map, base=str(base_dir))
    try:
        if config.workers <= 1 or len(cards) < 2:
            return [_decode_card(c) for c in cards]
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, len(cards) // (config.workers * 8))
        with ProcessPoolExecutor(config.workers, mp_context=ctx) as pool:
            return list(pool.map(_decode_card, cards, chunksize=chunk))
    finally:
        _CTX.clear()


def write_predictions(preds: Iterable[Prediction], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in preds:
            fh.write(p.to_json() + "\n")


def read_predictions(path: str | Path) -> list[Prediction]:
    preds = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
            preds.append(Prediction(str(r["card_id"]), r["pred"], r["score"], r["decoder"], tuple(r.get("flags", ()))))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad prediction record ({exc})") from None
    return preds


def report(preds: Sequence[Prediction], cards: Sequence[CardRecord], fold: bool = False) -> EvalReport:
    """Metrics for one decode run against the manifest's gold labels."""
    gold = {}
    for c in cards:
        if c.card_id in gold:
            raise DataError(f"duplicate card_id {c.card_id!r} in manifest")
        gold[c.card_id] = c.gold_label
    seen = set()
    pairs = []
    for p in preds:
        if p.card_id in seen:
            raise DataError(f"duplicate card_id {p.card_id!r} in predictions")
        seen.add(p.card_id)
        if p.card_id not in gold:
            raise DataError(f"prediction for unknown card {p.card_id!r}")
        pairs.append(EvalPair(gold[p.card_id], p.pred))
    missing = gold.keys() - seen
    if missing:
        raise DataError(f"{len(missing)} manifest cards have no prediction, e.g. {min(missing)!r}")
    return evaluate(pairs, fold=fold)


TABLE_COLUMNS = ("Word accuracy", "Normalised edit distance", "Edit distance", "Average edit on misclassified")


def render_table(rows: Sequence[tuple[str, EvalReport]]) -> str:
    """Plain-text comparison table with one row per decoder run."""
    name_w = max([len("Model")] + [len(name) for name, _ in rows])
    header = ["Model".ljust(name_w)] + list(TABLE_COLUMNS)
    lines = [" | ".join(header)]
    lines.append("-+-".join("-" * len(h) for h in header))
    for name, r in rows:
        miscl = "-" if r.avg_edit_misclassified is None else f"{r.avg_edit_misclassified:.4f}"
        cells = [f"{r.word_accuracy:.4f}", f"{r.avg_norm_edit:.4f}", f"{r.avg_edit:.4f}", miscl]
        lines.append(" | ".join([name.ljust(name_w)] + [c.rjust(len(h)) for c, h in zip(cells, TABLE_COLUMNS)]))
    return "\n".join(lines)


@dataclass(frozen=True)
class StandardSetup:
    """The desk-scale comparison: natural-distribution words, boxes over their lexicon."""

    n_words: int = 5000
    freq_list_size: int = 20_000
    k: int = 50
    epsilon: float = 0.25
    confusion_boost: float = 5.0
    frames_per_char: int = 3
    out_of_range_frac: float = 0.0
    seed: int = 42


def prepare_standard(setup: StandardSetup, work_dir: str | Path, alphabet: Alphabet):
    """Generate words, lexicon, boxes and the card dataset under ``work_dir``."""
    from .corpus import pseudo_polish_frequency_list, sample_words
    from .lexicon import build_lexicon, save_boxes, save_words

    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    freq = pseudo_polish_frequency_list(setup.freq_list_size, seed=setup.seed)
    words = sample_words(freq, setup.n_words, seed=setup.seed)
    lexicon = build_lexicon(words, alphabet)
    boxes = make_boxes(lexicon, setup.k)
    save_words(words, work_dir / "words.txt")
    save_words(lexicon.words, work_dir / "lexicon.txt")
    save_boxes(boxes, work_dir / "boxes.jsonl")
    noise = NoiseParams(setup.epsilon, setup.frames_per_char, setup.confusion_boost, setup.seed)
    cards = build_dataset(words, boxes, noise, setup.seed, work_dir / "cards", alphabet,
                          out_of_range_frac=setup.out_of_range_frac)
    return cards, lexicon, boxes


def run_comparison(
    setup: StandardSetup,
    work_dir: str | Path,
    alphabet: Alphabet,
    decoders: Sequence[str] = (BP, WBS, WBS_C),
    beam_width: int = 25,
    workers: int = 1,
) -> dict[str, tuple[EvalReport, Path]]:
    """Build the dataset once, decode it with each decoder, write predictions."""
    work_dir = Path(work_dir)
    cards, lexicon, boxes = prepare_standard(setup, work_dir, alphabet)
    out = {}
    for name in decoders:
        config = ExperimentConfig(decoder=name, beam_width=beam_width, workers=workers)
        preds = run_decode(cards, work_dir / "cards", config, alphabet, lexicon, boxes)
        path = work_dir / f"pred_{name.lower()}.jsonl"
        write_predictions(preds, path)
        out[name] = (report(preds, cards), path)
        log.info("%s: accuracy %.4f", name, out[name][0].word_accuracy)
    return out
