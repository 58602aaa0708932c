"""Text-level synthetic corpora.

Two word sources: sampling real-looking words in proportion to corpus
counts, and random strings built only from diacritic letters. A
pseudo-Polish frequency list generator provides large fixtures when no real
corpus is at hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .alphabet import Alphabet, check_word


@dataclass(frozen=True)
class FrequencyList:
    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        for word, count in self.entries:
            if count <= 0:
                raise ValueError(f"non-positive count for {word!r}")
            if not word:
                raise ValueError("empty word in frequency list")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.entries]

    def check(self, alphabet: Alphabet) -> None:
        for w, _ in self.entries:
            check_word(alphabet.fold(w), alphabet)


def load_frequency_list(path: str | Path) -> FrequencyList:
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'word<TAB>count'")
        try:
            entries.append((parts[0], int(parts[1])))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: count is not an integer") from None
    return FrequencyList(tuple(entries))


def save_frequency_list(freq: FrequencyList, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w, c in freq.entries:
            fh.write(f"{w}\t{c}\n")


def sample_words(freq: FrequencyList, n: int, seed: int) -> list[str]:
    """``n`` draws with replacement, proportional to counts."""
    if len(freq) == 0:
        raise ValueError("empty frequency list")
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = np.array([c for _, c in freq.entries], dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(counts), size=n, p=counts / counts.sum())
    words = freq.words
    return [words[i] for i in idx]


def gen_diacritic_strings(
    alphabet: Alphabet,
    n: int,
    length_range: tuple[int, int] = (2, 8),
    seed: int = 0,
    subset: Sequence[str] | None = None,
) -> list[str]:
    """Random strings drawn uniformly from the diacritic symbols of ``alphabet``."""
    lo, hi = length_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad length range {length_range}")
    pool = list(subset) if subset is not None else list(alphabet.diacritics())
    if not pool:
        raise ValueError("alphabet has no diacritic symbols")
    for s in pool:
        check_word(s, alphabet)
    rng = np.random.default_rng(seed)
    lengths = rng.integers(lo, hi + 1, size=n)
    return ["".join(pool[i] for i in rng.integers(0, len(pool), size=k)) for k in lengths]


# Syllable inventory for pseudo-Polish stems, weighted roughly by how common
# each piece is in Polish text. Stems take several inflection-like endings,
# which gives the lexicon the dense near-neighbour structure of real Polish.
_ONSETS = {
    "": 6, "b": 3, "c": 3, "ch": 2, "cz": 3, "d": 4, "dz": 1, "f": 1, "g": 2, "h": 1,
    "j": 2, "k": 5, "l": 3, "ł": 2, "m": 4, "n": 4, "p": 5, "r": 3, "s": 4, "sz": 2,
    "ś": 1, "t": 4, "w": 5, "z": 4, "ż": 1, "ź": 0.3, "ć": 0.5, "rz": 2, "dź": 0.4,
    "pr": 2, "br": 1, "kr": 2, "gr": 1, "tr": 1, "dr": 1, "st": 2, "sk": 1, "sp": 1,
    "zw": 1, "pl": 1, "kl": 1, "gł": 1, "śl": 0.5, "prz": 1, "trz": 0.5,
    "v": 0.2, "x": 0.05, "q": 0.02,
}
_VOWELS = {"a": 9, "e": 8, "i": 7, "o": 8, "u": 3, "y": 4, "ą": 1, "ę": 1.2, "ó": 0.9, "ie": 1.5}
_CODAS = {"": 12, "n": 2, "m": 1, "k": 1, "ł": 1, "r": 1.5, "s": 1, "ć": 0.4, "ń": 0.4, "ż": 0.3, "j": 1, "st": 0.4, "ść": 0.3}
_ENDINGS = {
    "": 6, "a": 5, "y": 3, "u": 3, "em": 2, "ie": 2, "ów": 1.5, "ami": 1, "ach": 1, "ę": 1.5,
    "ą": 1.5, "ek": 1, "ka": 1, "ski": 0.7, "ać": 1.5, "ić": 1, "anie": 1, "ość": 0.8, "owy": 0.7,
}


def _table(d):
    keys = list(d)
    w = np.array([d[k] for k in keys], dtype=float)
    return keys, w / w.sum()


def pseudo_polish_frequency_list(n_words: int, seed: int = 0, zipf_s: float = 1.0) -> FrequencyList:
    """``n_words`` distinct pseudo-Polish words with Zipf-distributed counts."""
    rng = np.random.default_rng(seed)
    onsets, vowels, codas, endings = (_table(d) for d in (_ONSETS, _VOWELS, _CODAS, _ENDINGS))

    def pick(table, size):
        keys, p = table
        return [keys[i] for i in rng.choice(len(keys), size=size, p=p)]

    words: dict[str, None] = {}
    while len(words) < n_words:
        n_syll = int(rng.choice([1, 2, 3], p=[0.35, 0.45, 0.2]))
        stem = "".join(o + v + c for o, v, c in zip(pick(onsets, n_syll), pick(vowels, n_syll), pick(codas, n_syll)))
        n_forms = int(rng.integers(1, 6))
        for ending in dict.fromkeys(pick(endings, n_forms)):
            w = stem + ending
            if len(w) >= 2 and len(words) < n_words:
                words.setdefault(w, None)
    order = list(words)
    rng.shuffle(order)
    top = 10 * n_words
    return FrequencyList(tuple((w, max(1, int(top / (r + 1) ** zipf_s))) for r, w in enumerate(order)))
