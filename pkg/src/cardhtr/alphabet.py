"""Symbol inventory, blank convention and collation order.

Column 0 of every emission matrix is the CTC blank. Non-blank symbols are
single Unicode scalar values; uppercase symbols fold onto their lowercase
counterparts, and word ordering compares folded words rank by rank.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

BLANK = "-"

# q, v, x are not native Polish letters but appear in loanwords and lemmas.
POLISH_LOWER = tuple("aąbcćdeęfghijklłmnńoópqrsśtuvwxyzźż")


class AlphabetError(ValueError):
    """Raised for malformed alphabets and for words that fall outside one."""


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]
    collation_rank: dict[str, int] = field(repr=False)
    case_fold: dict[str, str] = field(repr=False)

    def __post_init__(self):
        # Frozen dataclass fields are plain dicts; build derived lookups once.
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index and symbol != BLANK

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Alphabet):
            return NotImplemented
        return self.symbols == other.symbols and self.collation_rank == other.collation_rank

    @property
    def blank_index(self) -> int:
        return 0

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise AlphabetError(f"symbol {symbol!r} not in alphabet") from None

    def fold(self, word: str) -> str:
        """Case-fold ``word`` symbol by symbol. Unknown characters pass through."""
        return "".join(self.case_fold.get(c, c) for c in word)

    def folded_symbols(self) -> tuple[str, ...]:
        """Distinct lowercase symbols, in collation order."""
        return tuple(sorted(self.collation_rank, key=self.collation_rank.__getitem__))

    def sort_key(self, word: str) -> tuple[int, ...]:
        """Collation key of the folded word; tuple order puts prefixes first."""
        ranks = self.collation_rank
        try:
            return tuple(ranks[self.case_fold.get(c, c)] for c in word)
        except KeyError:
            for pos, c in enumerate(word):
                if self.case_fold.get(c, c) not in ranks:
                    raise AlphabetError(
                        f"character {c!r} at position {pos} of {word!r} is not in the alphabet"
                    ) from None
            raise

    def diacritics(self) -> tuple[str, ...]:
        """Symbols carrying a diacritic (combining mark or stroke), in column order."""
        return tuple(s for s in self.symbols[1:] if diacritic_base(s) is not None)


def diacritic_base(symbol: str) -> str | None:
    """Base letter of a diacritic symbol, or None for plain symbols."""
    if symbol in _STROKED:
        return _STROKED[symbol]
    decomposed = unicodedata.normalize("NFD", symbol)
    if len(decomposed) > 1 and all(unicodedata.combining(c) for c in decomposed[1:]):
        return decomposed[0]
    return None


# Letters whose diacritic is not a combining mark in Unicode.
_STROKED = {"ł": "l", "Ł": "L", "đ": "d", "Đ": "D", "ø": "o", "Ø": "O"}


def build_alphabet(symbols: Sequence[str], collation: Sequence[str] | None = None) -> Alphabet:
    """Build an alphabet from non-blank ``symbols`` (blank is prepended).

    ``collation`` lists every lowercase symbol in sort order. When omitted it
    is taken from the order in which folded symbols first appear in
    ``symbols``.
    """
    symbols = list(symbols)
    if not symbols:
        raise AlphabetError("alphabet is empty")
    seen = set()
    for s in symbols:
        if len(s) != 1:
            raise AlphabetError(f"symbol {s!r} is not a single character")
        if s == BLANK or s.isspace():
            raise AlphabetError(f"symbol {s!r} is reserved")
        if s in seen:
            raise AlphabetError(f"duplicate symbol {s!r}")
        seen.add(s)

    case_fold = {}
    for s in symbols:
        low = s.lower()
        if low != s and len(low) == 1:
            if low not in seen:
                raise AlphabetError(f"uppercase {s!r} has no lowercase counterpart")
            case_fold[s] = low
    lowercase = [s for s in symbols if s not in case_fold]

    if collation is None:
        collation = lowercase
    collation = list(collation)
    if len(set(collation)) != len(collation):
        raise AlphabetError("duplicate symbol in collation list")
    missing = [s for s in lowercase if s not in collation]
    if missing:
        raise AlphabetError(f"collation list incomplete, missing {''.join(missing)!r}")
    extra = [s for s in collation if s not in lowercase]
    if extra:
        raise AlphabetError(f"collation list has symbols outside the alphabet: {extra!r}")

    return Alphabet(
        symbols=(BLANK, *symbols),
        collation_rank={s: r for r, s in enumerate(collation)},
        case_fold=case_fold,
    )


def polish_alphabet(digits: bool = False) -> Alphabet:
    """Default inventory: Polish lowercase letters, then their capitals."""
    symbols = list(POLISH_LOWER) + [s.upper() for s in POLISH_LOWER]
    if digits:
        symbols += list("0123456789")
    return build_alphabet(symbols)


def load_alphabet(path: str | Path) -> Alphabet:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != BLANK:
        raise AlphabetError(f"{path}: first line must be the blank marker {BLANK!r}")
    return build_alphabet([ln for ln in lines[1:] if ln != ""])


def save_alphabet(alphabet: Alphabet, path: str | Path) -> None:
    Path(path).write_text("\n".join(alphabet.symbols) + "\n", encoding="utf-8")


def collate_compare(a: str, b: str, alphabet: Alphabet) -> int:
    """Three-way compare of two words: -1, 0 or 1."""
    ka, kb = alphabet.sort_key(a), alphabet.sort_key(b)
    return (ka > kb) - (ka < kb)


def in_range(word: str, lo: str, hi: str, alphabet: Alphabet) -> bool:
    klo, khi = alphabet.sort_key(lo), alphabet.sort_key(hi)
    if klo > khi:
        raise AlphabetError(f"inverted range [{lo!r}, {hi!r}]")
    return klo <= alphabet.sort_key(word) <= khi


def check_word(word: str, alphabet: Alphabet) -> None:
    for pos, c in enumerate(word):
        if c not in alphabet:
            raise AlphabetError(f"character {c!r} at position {pos} of {word!r} is not in the alphabet")


def collation_sorted(words: Iterable[str], alphabet: Alphabet) -> list[str]:
    return sorted(words, key=alphabet.sort_key)
