"""CTC decoders: best path, prefix beam search, word beam search and its box-constrained variant.

All accumulation happens in log space. Beams are pruned to ``width`` after
every frame; equal scores are ordered by collation order of the prefix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .alphabet import BLANK, Alphabet
from .emissions import EmissionMatrix, validate
from .lexicon import BoxRange, Lexicon, TrieNode, restrict_range

NEG_INF = float("-inf")
WBS_FLOOR = 1e-30

BP, BS, WBS, WBS_C = "BP", "BS", "WBS", "WBS-C"
DECODERS = (BP, BS, WBS, WBS_C)


class DecodeError(ValueError):
    pass


class EmptyRangeError(DecodeError):
    """The box range leaves no lexicon word to decode into."""


@dataclass(frozen=True)
class Decoded:
    label: str
    score: float
    decoder: str


@dataclass(frozen=True)
class BeamParams:
    width: int = 25

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("beam width must be >= 1")


def _logaddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


def _log(probs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(probs)


def _check(emat: EmissionMatrix, alphabet: Alphabet) -> None:
    if not emat.matches(alphabet):
        raise DecodeError("emission matrix columns do not match the alphabet")
    report = validate(emat)
    if not report:
        raise DecodeError(f"invalid emission matrix: {report.message}")


def collapse(path: Sequence[str] | Sequence[int], alphabet: Alphabet) -> str:
    """Merge runs of equal symbols, then drop blanks.

    ``path`` holds symbols or column indices.
    """
    out = []
    prev = None
    for s in path:
        if not isinstance(s, str):
            s = alphabet.symbols[s]
        elif s != BLANK and s not in alphabet:
            raise DecodeError(f"symbol {s!r} not in alphabet")
        if s != prev and s != BLANK:
            out.append(s)
        prev = s
    return "".join(out)


def best_path(emat: EmissionMatrix, alphabet: Alphabet) -> Decoded:
    _check(emat, alphabet)
    if emat.T == 0:
        return Decoded("", 0.0, BP)
    idx = np.argmax(emat.probs, axis=1)  # first maximum wins: lower index on ties
    score = float(_log(emat.probs[np.arange(emat.T), idx]).sum())
    return Decoded(collapse(idx.tolist(), alphabet), score, BP)


def ctc_label_logprob(emat: EmissionMatrix, label: str, alphabet: Alphabet) -> float:
    """log P(label | emat) summed over every path that collapses to ``label``."""
    _check(emat, alphabet)
    lp = _log(emat.probs)
    T = emat.T
    ext = [0]
    for c in label:
        ext += [alphabet.index(c), 0]
    S = len(ext)
    if T == 0:
        return 0.0 if not label else NEG_INF
    alpha = np.full(S, NEG_INF)
    alpha[0] = lp[0, 0]
    if S > 1:
        alpha[1] = lp[0, ext[1]]
    # s-2 skip is allowed into a non-blank that differs from the one two back.
    skip = np.zeros(S, dtype=bool)
    for s in range(2, S):
        skip[s] = ext[s] != 0 and ext[s] != ext[s - 2]
    ext_arr = np.asarray(ext)
    for t in range(1, T):
        prev = alpha
        alpha = prev.copy()
        alpha[1:] = np.logaddexp(alpha[1:], prev[:-1])
        alpha[2:] = np.where(skip[2:], np.logaddexp(alpha[2:], prev[:-2]), alpha[2:])
        alpha = alpha + lp[t, ext_arr]
    if S == 1:
        return float(alpha[0])
    return float(np.logaddexp(alpha[-1], alpha[-2]))


def ctc_label_probability(emat: EmissionMatrix, label: str, alphabet: Alphabet) -> float:
    return math.exp(ctc_label_logprob(emat, label, alphabet))


def _column_keys(alphabet: Alphabet) -> list[int]:
    rank = alphabet.collation_rank
    return [-1] + [rank[alphabet.case_fold.get(s, s)] for s in alphabet.symbols[1:]]


def beam_search(emat: EmissionMatrix, alphabet: Alphabet, params: BeamParams = BeamParams()) -> Decoded:
    """Unconstrained CTC prefix beam search over all alphabet symbols."""
    _check(emat, alphabet)
    lp = _log(emat.probs)
    C = emat.C
    col_rank = _column_keys(alphabet)

    def key(prefix):
        return (tuple(col_rank[c] for c in prefix), prefix)

    prefixes: list[tuple[int, ...]] = [()]
    lb = np.array([0.0])
    lnb = np.array([NEG_INF])
    for t in range(emat.T):
        row = lp[t]
        B = len(prefixes)
        last = np.array([p[-1] if p else 0 for p in prefixes])
        total = np.logaddexp(lb, lnb)
        stay_b = total + row[0]
        stay_nb = np.where(last > 0, lnb + row[last], NEG_INF)

        ext = total[:, None] + row[None, :]
        ext[:, 0] = NEG_INF
        nonempty = np.nonzero(last > 0)[0]
        ext[nonempty, last[nonempty]] = lb[nonempty] + row[last[nonempty]]

        # An extension that reproduces a live prefix merges into it.
        where = {p: i for i, p in enumerate(prefixes)}
        for i, p in enumerate(prefixes):
            if p:
                parent = where.get(p[:-1])
                if parent is not None:
                    stay_nb[i] = np.logaddexp(stay_nb[i], ext[parent, p[-1]])
                    ext[parent, p[-1]] = NEG_INF

        cand_b = np.concatenate([stay_b, np.full(B * C, NEG_INF)])
        cand_nb = np.concatenate([stay_nb, ext.ravel()])
        cand_total = np.logaddexp(cand_b, cand_nb)
        chosen = _top(cand_total, params.width, lambda i: key(_cand_prefix(i, prefixes, C)))
        prefixes = [_cand_prefix(i, prefixes, C) for i in chosen]
        lb = cand_b[chosen]
        lnb = cand_nb[chosen]

    total = np.logaddexp(lb, lnb)
    best = min(range(len(prefixes)), key=lambda i: (-total[i], key(prefixes[i])))
    label = "".join(alphabet.symbols[c] for c in prefixes[best])
    return Decoded(label, float(total[best]), BS)


def _cand_prefix(i: int, prefixes, C: int) -> tuple[int, ...]:
    B = len(prefixes)
    if i < B:
        return prefixes[i]
    b, c = divmod(i - B, C)
    return prefixes[b] + (c,)


def _top(scores: np.ndarray, width: int, key) -> list[int]:
    """Indices of the ``width`` best finite scores; boundary ties go by ``key``."""
    finite = np.nonzero(scores > NEG_INF)[0]
    if len(finite) > width:
        vals = scores[finite]
        cut = np.partition(vals, len(vals) - width)[len(vals) - width]
        above = finite[vals > cut]
        tied = sorted(finite[vals == cut].tolist(), key=key)
        finite = np.concatenate([above, np.asarray(tied[: width - len(above)], dtype=int)])
    return sorted(finite.tolist(), key=lambda i: (-scores[i], key(i)))


@lru_cache(maxsize=16)
def _fold_projection(alphabet: Alphabet) -> tuple[np.ndarray, dict[str, int]]:
    """C x F matrix summing case variants into folded columns (column 0 stays blank)."""
    folded = alphabet.folded_symbols()
    col = {s: j + 1 for j, s in enumerate(folded)}
    proj = np.zeros((len(alphabet), len(folded) + 1))
    proj[0, 0] = 1.0
    for j, s in enumerate(alphabet.symbols[1:], start=1):
        proj[j, col[alphabet.case_fold.get(s, s)]] = 1.0
    return proj, col


def word_beam_search(
    emat: EmissionMatrix,
    alphabet: Alphabet,
    lexicon: Lexicon,
    params: BeamParams = BeamParams(),
    *,
    decoder: str = WBS,
) -> Decoded:
    """Prefix beam search restricted to prefixes of lexicon words (no language model).

    Case variants of a letter share one trie edge, so their probabilities are
    summed before searching. The result is always a lexicon word.
    """
    if lexicon.word_count == 0:
        raise DecodeError("word beam search needs a non-empty lexicon")
    _check(emat, alphabet)
    proj, col = _fold_projection(alphabet)
    probs = emat.probs @ proj
    # Floor exact zeros so a hard-zero frame cannot empty a trie-limited beam.
    lp = np.log(np.maximum(probs, WBS_FLOOR)).tolist()
    rank = alphabet.collation_rank
    width = params.width

    # prefix -> [log p ending in blank, log p ending in non-blank, trie node, collation key]
    beams: dict[str, list] = {"": [0.0, NEG_INF, lexicon.root, ()]}
    lae = _logaddexp
    for row in lp:
        blank_p = row[0]
        new: dict[str, list] = {}
        for prefix, (lb, lnb, node, pkey) in beams.items():
            total = lae(lb, lnb)
            entry = new.get(prefix)
            stay_nb = lnb + row[col[prefix[-1]]] if prefix else NEG_INF
            if entry is None:
                new[prefix] = [total + blank_p, stay_nb, node, pkey]
            else:
                entry[0] = lae(entry[0], total + blank_p)
                entry[1] = lae(entry[1], stay_nb)
            last = prefix[-1] if prefix else None
            for c, child in node.children.items():
                p = row[col[c]]
                if p == NEG_INF:
                    continue
                v = (lb if c == last else total) + p
                ext = prefix + c
                entry = new.get(ext)
                if entry is None:
                    new[ext] = [NEG_INF, v, child, pkey + (rank[c],)]
                else:
                    entry[1] = lae(entry[1], v)
        if len(new) > width:
            ranked = sorted(new.items(), key=lambda kv: (-lae(kv[1][0], kv[1][1]), kv[1][3]))
            beams = {k: v for k, v in ranked[:width] if lae(v[0], v[1]) > NEG_INF}
        else:
            beams = {k: v for k, v in new.items() if lae(v[0], v[1]) > NEG_INF}

    words = [(-lae(v[0], v[1]), v[3], v[2].word) for v in beams.values() if v[2].word is not None]
    if words:
        neg, _, word = min(words)
        return Decoded(word, -neg, decoder)

    # No surviving beam is a complete word: complete each one greedily.
    mean_prob = probs.mean(axis=0)
    penalty = float(np.mean(np.max(lp, axis=1))) if lp else 0.0
    completed = []
    for prefix, (lb, lnb, node, _) in beams.items():
        word, added = _complete(node, mean_prob, col)
        completed.append((-(lae(lb, lnb) + added * penalty), alphabet.sort_key(word), word))
    neg, _, word = min(completed)
    return Decoded(word, -neg, decoder)


def _complete(node: TrieNode, mean_prob: np.ndarray, col: dict[str, int]) -> tuple[str, int]:
    added = 0
    while node.word is None:
        # Children are in collation order; strict > keeps the first on ties.
        best_c, best_child, best_p = None, None, -1.0
        for c, child in node.children.items():
            if mean_prob[col[c]] > best_p:
                best_c, best_child, best_p = c, child, mean_prob[col[c]]
        node = best_child
        added += 1
    return node.word, added


def constrained_wbs(
    emat: EmissionMatrix,
    alphabet: Alphabet,
    lexicon: Lexicon,
    box: BoxRange,
    params: BeamParams = BeamParams(),
) -> Decoded:
    restricted = restrict_range(lexicon, box)
    if restricted.word_count == 0:
        raise EmptyRangeError(f"box {box.box_id} [{box.lo!r}, {box.hi!r}] holds no lexicon word")
    return word_beam_search(emat, alphabet, restricted, params, decoder=WBS_C)
