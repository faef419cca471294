"""Group a corpus into K-article samples.

Two selection rules: a seeded random chunking, and the greedy
MinSimilarity rule that grows each group with the unused article whose
summary is farthest (in cosine distance) from the group built so far.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .errors import EmbeddingFailure, KTooLarge
from .rng import Rng
from .similarity import EmbeddingProvider, fit_tfidf, unit_rows

SELECTIONS = ("random", "min_similarity")
AGGREGATIONS = ("min", "mean")

# Distances are compared after rounding so float noise cannot break documented ties.
_TIE_DECIMALS = 12


@dataclass(frozen=True)
class SampleGroup:
    article_ids: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.article_ids)


@dataclass
class Partition:
    groups: list[SampleGroup]
    dropped_ids: list[str]
    selection: str
    k: int
    seed: int | None = None
    # Corpus positions of each group's members, parallel to ``groups``.
    positions: list[tuple[int, ...]] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "selection": self.selection,
            "seed": self.seed,
            "k": self.k,
            "groups": [list(g.article_ids) for g in self.groups],
            "dropped": list(self.dropped_ids),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


def _check_k(corpus: Corpus, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(corpus) < k:
        raise KTooLarge(f"k={k} exceeds corpus size {len(corpus)}")


def _build(corpus: Corpus, order: list[tuple[int, ...]], dropped: list[int],
           selection: str, k: int, seed: int | None) -> Partition:
    ids = corpus.ids()
    return Partition(
        groups=[SampleGroup(tuple(ids[i] for i in g)) for g in order],
        dropped_ids=[ids[i] for i in dropped],
        selection=selection,
        k=k,
        seed=seed,
        positions=order,
    )


def random_partition(corpus: Corpus, k: int, seed: int = 0) -> Partition:
    """Fisher-Yates shuffle of corpus positions, then consecutive chunks of ``k``."""
    _check_k(corpus, k)
    order = Rng(seed).permutation(len(corpus))
    n_groups = len(order) // k
    groups = [tuple(order[g * k:(g + 1) * k]) for g in range(n_groups)]
    return _build(corpus, groups, order[n_groups * k:], "random", k, seed)


def _summary_matrix(corpus: Corpus, provider: EmbeddingProvider) -> np.ndarray:
    mat = np.asarray(provider.embed([a.summary for a in corpus]), dtype=float)
    if mat.ndim != 2 or mat.shape[0] != len(corpus):
        raise EmbeddingFailure(corpus[0].id if len(corpus) else "", "provider returned wrong shape")
    bad = np.flatnonzero(~np.all(np.isfinite(mat), axis=1))
    if bad.size:
        raise EmbeddingFailure(corpus[int(bad[0])].id, "non-finite embedding")
    return mat


def min_similarity_partition(corpus: Corpus, k: int,
                             provider: EmbeddingProvider | None = None,
                             aggregation: str = "min", seed: int | None = None) -> Partition:
    """Greedy MinSimilarity grouping over summary embeddings.

    ``aggregation`` sets the candidate-to-group distance: ``"min"`` takes the
    smallest cosine distance to any member (farthest-point rule), ``"mean"``
    the average.  Ties go to the lowest corpus position.  A group that cannot
    reach ``k`` members because the unused pool ran dry is dropped.  ``seed``
    is recorded only; the procedure itself is deterministic.
    """
    _check_k(corpus, k)
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    if provider is None:
        provider = fit_tfidf([a.summary for a in corpus])
    units = unit_rows(_summary_matrix(corpus, provider))

    n = len(corpus)
    unused = np.ones(n, dtype=bool)
    groups: list[tuple[int, ...]] = []
    dropped: list[int] = []
    for i in range(n):
        if not unused[i]:
            continue
        unused[i] = False
        members = [i]
        agg = 1.0 - units @ units[i]
        while len(members) < k and unused.any():
            dist = agg if aggregation == "min" else agg / len(members)
            masked = np.where(unused, np.round(dist, _TIE_DECIMALS), -np.inf)
            c = int(np.argmax(masked))
            unused[c] = False
            members.append(c)
            step = 1.0 - units @ units[c]
            agg = np.minimum(agg, step) if aggregation == "min" else agg + step
        if len(members) == k:
            groups.append(tuple(members))
        else:
            dropped.extend(members)
    return _build(corpus, groups, dropped, "min_similarity", k, seed)


def partition(corpus: Corpus, k: int, selection: str = "random", seed: int = 0,
              provider: EmbeddingProvider | None = None, aggregation: str = "min") -> Partition:
    if selection == "random":
        return random_partition(corpus, k, seed)
    if selection == "min_similarity":
        return min_similarity_partition(corpus, k, provider, aggregation=aggregation, seed=seed)
    raise ValueError(f"unknown selection {selection!r}; expected one of {SELECTIONS}")
