"""ROUGE-1, ROUGE-2, ROUGE-L and summary-level ROUGE-Lsum.

Tokens are lowercased alphanumeric runs (every other character acts as a
space); no stemming and no stopword removal.  F-measure is balanced F1.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

METRICS = ("rouge1", "rouge2", "rougeL", "rougeLsum")

_NON_ALNUM = re.compile(r"[\W_]+")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, hits: int, n_cand: int, n_ref: int) -> "RougeScore":
        if n_cand == 0 or n_ref == 0 or hits == 0:
            return ZERO
        p = hits / n_cand
        r = hits / n_ref
        return cls(p, r, 2 * p * r / (p + r))


ZERO = RougeScore(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RougeScores:
    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore
    rougeLsum: RougeScore

    def f1s(self) -> dict[str, float]:
        return {m: getattr(self, m).f1 for m in METRICS}

    def rouge_sum(self) -> float:
        return self.rouge1.f1 + self.rouge2.f1 + self.rougeL.f1 + self.rougeLsum.f1

    def as_dict(self, scale: float = 1.0) -> dict[str, dict[str, float]]:
        return {
            m: {
                "precision": getattr(self, m).precision * scale,
                "recall": getattr(self, m).recall * scale,
                "f1": getattr(self, m).f1 * scale,
            }
            for m in METRICS
        }


def rouge_tokenize(text: str) -> list[str]:
    return _NON_ALNUM.sub(" ", text.lower()).split()


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _rouge_n_tokens(cand: Sequence[str], ref: Sequence[str], n: int) -> RougeScore:
    c, r = _ngrams(cand, n), _ngrams(ref, n)
    hits = sum((c & r).values())
    return RougeScore.from_counts(hits, sum(c.values()), sum(r.values()))


def rouge_n(candidate: str, reference: str, n: int = 1) -> RougeScore:
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    return _rouge_n_tokens(rouge_tokenize(candidate), rouge_tokenize(reference), n)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def lcs_ref_positions(ref: Sequence[str], cand: Sequence[str]) -> tuple[int, ...]:
    """Positions in ``ref`` of one longest common subsequence with ``cand``.

    Among all LCS alignments, returns the lexicographically smallest tuple of
    reference positions, which makes the Lsum union well defined.
    """
    m, n = len(ref), len(cand)
    if not m or not n:
        return ()
    # suffix[i][j] = LCS length of ref[i:] and cand[j:]
    suffix = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        row, below = suffix[i], suffix[i + 1]
        for j in range(n - 1, -1, -1):
            row[j] = below[j + 1] + 1 if ref[i] == cand[j] else max(below[j], row[j + 1])
    out = []
    i = j = 0
    remaining = suffix[0][0]
    while remaining:
        while True:
            try:
                jj = cand.index(ref[i], j)
            except ValueError:
                jj = -1
            if jj >= 0 and suffix[i + 1][jj + 1] == remaining - 1:
                break
            i += 1
        out.append(i)
        i, j, remaining = i + 1, jj + 1, remaining - 1
    return tuple(out)


def rouge_l(candidate: str, reference: str) -> RougeScore:
    cand, ref = rouge_tokenize(candidate), rouge_tokenize(reference)
    return RougeScore.from_counts(lcs_length(cand, ref), len(cand), len(ref))


def _lines(text: str) -> list[list[str]]:
    return [toks for toks in (rouge_tokenize(line) for line in text.split("\n")) if toks]


def rouge_l_sum(candidate: str, reference: str) -> RougeScore:
    """Summary-level LCS with newlines as sentence boundaries.

    Each reference line is credited with the union of its LCS matches against
    every candidate line; a matched token counts only while both sides still
    have unclaimed occurrences of it.
    """
    cand_lines, ref_lines = _lines(candidate), _lines(reference)
    cand_counts = Counter(t for line in cand_lines for t in line)
    ref_counts = Counter(t for line in ref_lines for t in line)
    n_cand, n_ref = sum(cand_counts.values()), sum(ref_counts.values())
    if not n_cand or not n_ref:
        return ZERO
    hits = 0
    for ref in ref_lines:
        union: set[int] = set()
        for cand in cand_lines:
            union.update(lcs_ref_positions(ref, cand))
        for pos in sorted(union):
            tok = ref[pos]
            if cand_counts[tok] > 0 and ref_counts[tok] > 0:
                hits += 1
                cand_counts[tok] -= 1
                ref_counts[tok] -= 1
    return RougeScore.from_counts(hits, n_cand, n_ref)


def rouge_suite(candidate: str, reference: str) -> RougeScores:
    cand, ref = rouge_tokenize(candidate), rouge_tokenize(reference)
    if not cand or not ref:
        return RougeScores(ZERO, ZERO, ZERO, ZERO)
    return RougeScores(
        rouge1=_rouge_n_tokens(cand, ref, 1),
        rouge2=_rouge_n_tokens(cand, ref, 2),
        rougeL=RougeScore.from_counts(lcs_length(cand, ref), len(cand), len(ref)),
        rougeLsum=rouge_l_sum(candidate, reference),
    )


def rouge_sum(candidate: str, reference: str) -> float:
    """Sum of the four F1 values, in [0, 4]."""
    return rouge_suite(candidate, reference).rouge_sum()
