"""CTC emission matrices: container, validation, EMAT v1 files and a noisy generator.

The generator stands in for a trained recognizer. It lays out a canonical
frame path for the label and diverts a random share of each frame's mass to
other symbols, preferring the base-letter/diacritic partner of the
canonical symbol.
"""

from __future__ import annotations

import io
from functools import lru_cache
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .alphabet import BLANK, Alphabet, check_word, diacritic_base

ROW_TOL = 1e-6


class EmatFormatError(ValueError):
    """Raised when an EMAT stream is malformed."""


@dataclass(frozen=True, eq=False)
class EmissionMatrix:
    """T x C row-stochastic matrix; column ``j`` is ``symbols[j]``, column 0 blank."""

    probs: np.ndarray
    symbols: tuple[str, ...]

    @property
    def T(self) -> int:
        return self.probs.shape[0]

    @property
    def C(self) -> int:
        return self.probs.shape[1]

    def matches(self, alphabet: Alphabet) -> bool:
        return self.symbols == alphabet.symbols


@dataclass(frozen=True)
class NoiseParams:
    """Generator settings.

    ``epsilon`` is the expected share of each frame's mass diverted away from
    the canonical symbol. The per-frame share is Beta distributed with that
    mean; ``concentration`` is the Beta's a + b (smaller means burstier noise).
    The share is drawn once per character and perturbed per frame by Gaussian
    ``jitter``.
    ``confusion_boost`` weights diacritic partners of the canonical symbol.
    """

    epsilon: float = 0.0
    frames_per_char: int = 3
    confusion_boost: float = 5.0
    seed: int = 0
    concentration: float = 1.0
    jitter: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.frames_per_char < 1:
            raise ValueError("frames_per_char must be >= 1")
        if self.confusion_boost <= 0 or self.concentration <= 0:
            raise ValueError("confusion_boost and concentration must be positive")


@dataclass(frozen=True)
class Validation:
    ok: bool
    row: int | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


@lru_cache(maxsize=16)
def confusable_pairs(alphabet: Alphabet) -> dict[int, tuple[int, ...]]:
    """Column index -> columns of its base letter / diacritic variants."""
    groups: dict[str, list[int]] = {}
    for j, s in enumerate(alphabet.symbols[1:], start=1):
        base = diacritic_base(s) or s
        groups.setdefault(base, []).append(j)
    out = {}
    for members in groups.values():
        for j in members:
            partners = [k for k in members if k != j]
            # Variants pair with their base letter, not with sibling variants.
            if diacritic_base(alphabet.symbols[j]) is not None:
                partners = [k for k in partners if diacritic_base(alphabet.symbols[k]) is None]
            if partners:
                out[j] = tuple(partners)
    return out


def canonical_path(label: str, alphabet: Alphabet, frames_per_char: int) -> list[int]:
    path: list[int] = []
    prev = None
    for c in label:
        j = alphabet.index(c)
        if j == prev:
            path.append(0)
        path.extend([j] * frames_per_char)
        prev = j
    return path


def synthesize_emissions(label: str, alphabet: Alphabet, params: NoiseParams) -> EmissionMatrix:
    if not label:
        raise ValueError("label must be non-empty")
    check_word(label, alphabet)
    path = np.array(canonical_path(label, alphabet, params.frames_per_char))
    T, C = len(path), len(alphabet)
    probs = np.zeros((T, C))
    probs[np.arange(T), path] = 1.0
    if params.epsilon == 0.0:
        return EmissionMatrix(probs, alphabet.symbols)

    rng = np.random.default_rng(params.seed)
    pairs = confusable_pairs(alphabet)
    eps, kappa = params.epsilon, params.concentration
    # One draw per character segment (a blank separator is its own segment):
    # a misread affects every frame of the character, with mild frame jitter.
    starts = np.r_[True, (path[1:] != path[:-1]) | (path[1:] == 0)]
    seg = np.cumsum(starts) - 1
    n_seg = int(seg[-1]) + 1
    seg_diverted = rng.beta(eps * kappa, (1.0 - eps) * kappa, size=n_seg)
    seg_spike = rng.random(n_seg)
    seg_draw = rng.random(n_seg)
    jitter = rng.normal(0.0, params.jitter, size=T)
    rows = np.arange(T)
    w = np.ones((T, C))
    w[rows, path] = 0.0
    for t, j in enumerate(path):
        for partner in pairs.get(j, ()):
            w[t, partner] = params.confusion_boost
    w /= w.sum(axis=1, keepdims=True)
    intruder = np.minimum((np.cumsum(w, axis=1) <= seg_draw[seg][:, None]).sum(axis=1), C - 1)
    intruder = np.where(intruder == path, w.argmax(axis=1), intruder)
    d = np.clip(seg_diverted[seg] + jitter, 0.0, 1.0 - 1e-9)
    spike = seg_spike[seg]
    out = (d * (1.0 - spike))[:, None] * w
    out[rows, intruder] += d * spike
    out[rows, path] = 1.0 - d
    probs = out / out.sum(axis=1, keepdims=True)
    return EmissionMatrix(probs, alphabet.symbols)


def validate(emat: EmissionMatrix | np.ndarray) -> Validation:
    probs = emat.probs if isinstance(emat, EmissionMatrix) else np.asarray(emat, dtype=float)
    if probs.ndim != 2 or probs.shape[1] == 0:
        return Validation(False, None, f"expected a 2-D matrix with columns, got shape {probs.shape}")
    if isinstance(emat, EmissionMatrix) and len(emat.symbols) != probs.shape[1]:
        return Validation(False, None, f"{len(emat.symbols)} symbols for {probs.shape[1]} columns")
    bad_range = ~np.all(np.isfinite(probs) & (probs >= 0.0) & (probs <= 1.0), axis=1)
    sums = probs.sum(axis=1)
    bad_sum = np.abs(sums - 1.0) > ROW_TOL
    bad = np.nonzero(bad_range | bad_sum)[0]
    if len(bad):
        t = int(bad[0])
        if bad_range[t]:
            return Validation(False, t, f"row {t} has entries outside [0, 1]")
        return Validation(False, t, f"row {t} sums to {sums[t]:.9g}")
    return Validation(True)


def dump_emat(emat: EmissionMatrix, fh: TextIO) -> None:
    fh.write("EMAT 1\n")
    fh.write(f"T {emat.T} C {emat.C}\n")
    fh.write(" ".join(emat.symbols) + "\n")
    for row in emat.probs:
        fh.write(" ".join(format(float(x), ".12g") for x in row) + "\n")


def save_emat(emat: EmissionMatrix, destination: str | Path) -> None:
    check = validate(emat)
    if not check:
        raise ValueError(f"refusing to save invalid matrix: {check.message}")
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        dump_emat(emat, fh)


def dumps_emat(emat: EmissionMatrix) -> str:
    buf = io.StringIO()
    dump_emat(emat, buf)
    return buf.getvalue()


def parse_emat(text: str) -> EmissionMatrix:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 3 or lines[0] != "EMAT 1":
        raise EmatFormatError("missing 'EMAT 1' header")
    head = lines[1].split(" ")
    if len(head) != 4 or head[0] != "T" or head[2] != "C":
        raise EmatFormatError(f"malformed dimension line {lines[1]!r}")
    try:
        T, C = int(head[1]), int(head[3])
    except ValueError:
        raise EmatFormatError(f"malformed dimension line {lines[1]!r}") from None
    symbols = tuple(lines[2].split(" "))
    if len(symbols) != C:
        raise EmatFormatError(f"symbol line has {len(symbols)} symbols, header declares C={C}")
    if symbols[0] != BLANK:
        raise EmatFormatError("first column must be the blank '-'")
    rows = lines[3:]
    if len(rows) != T:
        raise EmatFormatError(f"header declares T={T}, found {len(rows)} rows")
    probs = np.empty((T, C))
    for t, line in enumerate(rows):
        cells = line.split(" ")
        if len(cells) != C:
            raise EmatFormatError(f"row {t} has {len(cells)} cells, expected {C}")
        try:
            probs[t] = [float(x) for x in cells]
        except ValueError:
            raise EmatFormatError(f"row {t} has a non-numeric cell") from None
    return EmissionMatrix(probs, symbols)


def load_emat(source: str | Path) -> EmissionMatrix:
    return parse_emat(Path(source).read_text(encoding="utf-8"))
