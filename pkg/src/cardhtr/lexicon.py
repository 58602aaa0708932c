"""Closed word lists as prefix tries, box ranges, and nearest-word correction."""

from __future__ import annotations

import bisect
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .alphabet import Alphabet, AlphabetError


class LexiconError(ValueError):
    pass


class TrieNode:
    __slots__ = ("children", "word")

    def __init__(self):
        self.children: dict[str, TrieNode] = {}
        self.word: str | None = None


@dataclass(frozen=True)
class BoxRange:
    box_id: str
    lo: str
    hi: str

    def check(self, alphabet: Alphabet) -> None:
        if alphabet.sort_key(self.lo) > alphabet.sort_key(self.hi):
            raise LexiconError(f"box {self.box_id}: inverted range [{self.lo!r}, {self.hi!r}]")

    def contains(self, word: str, alphabet: Alphabet) -> bool:
        return alphabet.sort_key(self.lo) <= alphabet.sort_key(word) <= alphabet.sort_key(self.hi)

    def to_json(self) -> str:
        return json.dumps({"box_id": self.box_id, "lo": self.lo, "hi": self.hi}, ensure_ascii=False)


class Lexicon:
    """Immutable set of folded words backed by a trie and a collation-sorted list."""

    def __init__(self, words: Iterable[str], alphabet: Alphabet):
        self.alphabet = alphabet
        folded = set()
        for w in words:
            w = alphabet.fold(unicodedata.normalize("NFC", w))
            if not w:
                continue
            for pos, c in enumerate(w):
                if c not in alphabet.collation_rank:
                    raise AlphabetError(
                        f"word {w!r}: character {c!r} at position {pos} is not in the alphabet"
                    )
            folded.add(w)
        self._words = sorted(folded, key=alphabet.sort_key)
        self._keys = [alphabet.sort_key(w) for w in self._words]
        self.root = TrieNode()
        for w in self._words:
            node = self.root
            for c in w:
                child = node.children.get(c)
                if child is None:
                    child = node.children[c] = TrieNode()
                node = child
            node.word = w
        self._sort_children(self.root)

    def _sort_children(self, root: TrieNode) -> None:
        # Children dicts in collation order, so traversals visit words sorted.
        rank = self.alphabet.collation_rank
        stack = [root]
        while stack:
            node = stack.pop()
            if len(node.children) > 1:
                node.children = dict(sorted(node.children.items(), key=lambda kv: rank[kv[0]]))
            stack.extend(node.children.values())

    @property
    def word_count(self) -> int:
        return len(self._words)

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self) -> Iterator[str]:
        return iter(self._words)

    def __contains__(self, word: str) -> bool:
        node = self.node(self.alphabet.fold(word))
        return node is not None and node.word is not None

    def __repr__(self) -> str:
        return f"Lexicon({self.word_count} words)"

    @property
    def words(self) -> list[str]:
        return list(self._words)

    def node(self, prefix: str) -> TrieNode | None:
        node = self.root
        for c in prefix:
            node = node.children.get(c)
            if node is None:
                return None
        return node

    def completions(self, prefix: str) -> list[str]:
        """Words starting with ``prefix``, in collation order."""
        node = self.node(self.alphabet.fold(prefix))
        if node is None:
            return []
        out = []
        stack = [node]
        while stack:
            n = stack.pop()
            if n.word is not None:
                out.append(n.word)
            stack.extend(reversed(n.children.values()))
        return out

    def span(self, lo: str, hi: str) -> list[str]:
        klo, khi = self.alphabet.sort_key(lo), self.alphabet.sort_key(hi)
        if klo > khi:
            raise LexiconError(f"inverted range [{lo!r}, {hi!r}]")
        i = bisect.bisect_left(self._keys, klo)
        j = bisect.bisect_right(self._keys, khi)
        return self._words[i:j]


def build_lexicon(words: Iterable[str], alphabet: Alphabet) -> Lexicon:
    return Lexicon(words, alphabet)


def restrict_range(lexicon: Lexicon, box: BoxRange) -> Lexicon:
    return Lexicon(lexicon.span(box.lo, box.hi), lexicon.alphabet)


def nearest_match(query: str, lexicon: Lexicon, max_dist: int | None = None) -> tuple[str, int] | None:
    """Closest lexicon word to ``query`` by Levenshtein distance.

    Ties go to the word that sorts first. Returns None only when ``max_dist``
    is given and every word is farther than that.
    """
    if lexicon.word_count == 0:
        raise LexiconError("nearest_match on an empty lexicon")
    alphabet = lexicon.alphabet
    q = alphabet.fold(unicodedata.normalize("NFC", query))
    n = len(q)
    best_word: str | None = None
    best = max_dist + 1 if max_dist is not None else n + max(len(w) for w in lexicon) + 1

    # Pre-order DFS with children in collation order visits words sorted, so a
    # later word only wins with a strictly smaller distance.
    first_row = list(range(n + 1))
    stack: list[tuple[TrieNode, list[int]]] = [(lexicon.root, first_row)]
    while stack:
        node, row = stack.pop()
        if node.word is not None and row[n] < best:
            best, best_word = row[n], node.word
        if min(row) >= best:
            continue
        pushed = []
        for c, child in node.children.items():
            new = [row[0] + 1]
            for i in range(1, n + 1):
                new.append(min(new[i - 1] + 1, row[i] + 1, row[i - 1] + (q[i - 1] != c)))
            pushed.append((child, new))
        stack.extend(reversed(pushed))
    if best_word is None:
        return None
    return best_word, best


def load_words(path: str | Path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip()]


def save_words(words: Iterable[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w in words:
            fh.write(w + "\n")


def load_boxes(path: str | Path) -> list[BoxRange]:
    boxes = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            box = BoxRange(str(rec["box_id"]), rec["lo"], rec["hi"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise LexiconError(f"{path}:{lineno}: bad box record ({exc})") from None
        if box.box_id in seen:
            raise LexiconError(f"{path}:{lineno}: duplicate box_id {box.box_id!r}")
        seen.add(box.box_id)
        boxes.append(box)
    return boxes


def save_boxes(boxes: Iterable[BoxRange], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for b in boxes:
            fh.write(b.to_json() + "\n")
