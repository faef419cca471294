"""Cluster-then-summarize baseline.

Sentences are embedded, clustered (k-means or average-linkage
agglomerative on cosine distance), reduced to at most K clusters, and each
cluster is summarized independently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import split_sentences
from .errors import TooFewSentences
from .rng import Rng
from .service import DEFAULT_TIMEOUT, remote_summarize
from .similarity import EmbeddingProvider, cosine_matrix, fit_tfidf, unit_rows

CLUSTERERS = ("kmeans", "agglomerative")
REDUCTIONS = ("least", "closest", "longest", "shortest")
AUTO = "auto"
AUTO_DISTANCE = 0.5
KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 100

_LEAD = re.compile(r"lead_?(\d+)$")


@dataclass
class SentenceCluster:
    # Content positions and texts of the members, in content order.
    positions: list[int]
    sentences: list[str]
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.positions:
            raise ValueError("a cluster needs at least one sentence")

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def centroid(self) -> np.ndarray:
        return self.vectors.mean(axis=0)

    @property
    def total_char_length(self) -> int:
        return sum(len(s) for s in self.sentences)

    def merged(self, other: "SentenceCluster") -> "SentenceCluster":
        """Union of members; the centroid becomes the size-weighted mean."""
        rows = sorted(zip(self.positions + other.positions,
                          self.sentences + other.sentences,
                          list(self.vectors) + list(other.vectors)), key=lambda r: r[0])
        return SentenceCluster([r[0] for r in rows], [r[1] for r in rows],
                               np.array([r[2] for r in rows]))


@dataclass
class TwoStepConfig:
    clusterer: str = "kmeans"
    k_target: int | str | None = None
    reduction: str = "least"
    summarizer: str = "lead_3"
    seed: int = 0
    summarizer_endpoint: str | None = None
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.clusterer not in CLUSTERERS:
            raise ValueError(f"unknown clusterer {self.clusterer!r}")
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"unknown reduction {self.reduction!r}")
        if self.summarizer != "remote":
            m = _LEAD.match(self.summarizer)
            if not m or int(m.group(1)) < 1:
                raise ValueError(f"summarizer must be lead_<n> (n >= 1) or remote, got {self.summarizer!r}")


def _groups_to_clusters(labels: Sequence[int], sentences: Sequence[str],
                        vectors: np.ndarray) -> list[SentenceCluster]:
    """Clusters ordered by their first member's position; empty labels vanish."""
    members: dict[int, list[int]] = {}
    for pos, lab in enumerate(labels):
        members.setdefault(lab, []).append(pos)
    ordered = sorted(members.values(), key=lambda ps: ps[0])
    return [SentenceCluster(ps, [sentences[p] for p in ps], vectors[ps]) for ps in ordered]


def kmeans_labels(points: np.ndarray, k: int, seed: int = 0) -> list[int]:
    """Lloyd's algorithm from a seeded farthest-point initialization.

    Stops once no center moves more than ``KMEANS_TOL`` or after
    ``KMEANS_MAX_ITER`` rounds; distance ties go to the lower center index.
    """
    n = len(points)
    first = Rng(seed).below(n)
    centers = [points[first]]
    nearest = np.sum((points - points[first]) ** 2, axis=1)
    for _ in range(1, k):
        c = int(np.argmax(nearest))
        centers.append(points[c])
        nearest = np.minimum(nearest, np.sum((points - points[c]) ** 2, axis=1))
    centers = np.array(centers, dtype=float)
    labels = np.zeros(n, dtype=int)
    for _ in range(KMEANS_MAX_ITER):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        new = centers.copy()
        for c in range(k):
            mask = labels == c
            if mask.any():
                new[c] = points[mask].mean(axis=0)
        shift = np.max(np.linalg.norm(new - centers, axis=1))
        centers = new
        if shift <= KMEANS_TOL:
            break
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return [int(x) for x in np.argmin(d2, axis=1)]


def agglomerative_labels(vectors: np.ndarray, k: int | None = None,
                         threshold: float | None = None) -> list[int]:
    """Average-linkage clustering on cosine distance.

    Merges the closest pair (lowest index pair on ties) until ``k`` clusters
    remain, or, with ``threshold``, until no pair is closer than it.
    """
    n = len(vectors)
    dist = 1.0 - cosine_matrix(vectors, vectors)
    np.fill_diagonal(dist, np.inf)
    sizes = np.ones(n)
    alive = list(range(n))
    labels = list(range(n))
    target = 1 if k is None else k
    while len(alive) > target:
        sub = dist[np.ix_(alive, alive)]
        flat = int(np.argmin(sub))
        a, b = divmod(flat, len(alive))
        if a > b:
            a, b = b, a
        if threshold is not None and sub[a, b] >= threshold:
            break
        i, j = alive[a], alive[b]
        # Lance-Williams update for average linkage.
        merged = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (sizes[i] + sizes[j])
        dist[i, :] = merged
        dist[:, i] = merged
        dist[i, i] = np.inf
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        sizes[i] += sizes[j]
        labels = [i if lab == j else lab for lab in labels]
        alive.remove(j)
    return labels


def cluster_sentences(sentences: Sequence[str], embeddings: np.ndarray,
                      config: TwoStepConfig, k: int | str | None = None) -> list[SentenceCluster]:
    k = config.k_target if k is None else k
    vectors = np.asarray(embeddings, dtype=float)
    n = len(sentences)
    if k == AUTO:
        labels = agglomerative_labels(vectors, threshold=AUTO_DISTANCE)
        return _groups_to_clusters(labels, sentences, vectors)
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k_target must be a positive integer or 'auto', got {k!r}")
    if n < k:
        raise TooFewSentences(f"{n} sentences cannot form {k} clusters")
    if config.clusterer == "kmeans":
        labels = kmeans_labels(unit_rows(vectors), k, config.seed)
    else:
        labels = agglomerative_labels(vectors, k=k)
    return _groups_to_clusters(labels, sentences, vectors)


def _centroid_sims(clusters: Sequence[SentenceCluster]) -> np.ndarray:
    sims = cosine_matrix(np.array([c.centroid for c in clusters]),
                         np.array([c.centroid for c in clusters]))
    np.fill_diagonal(sims, -np.inf)
    return sims


def reduce_clusters(clusters: Sequence[SentenceCluster], k: int,
                    method: str = "least") -> list[SentenceCluster]:
    """Bring the cluster count down to at most ``k``.

    ``least`` folds the smallest cluster into its most similar neighbor,
    ``closest`` merges the most similar pair, ``longest`` / ``shortest`` keep
    the ``k`` clusters with the largest / smallest total character length.
    Similarity is centroid cosine; ties go to lower cluster indices.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if method not in REDUCTIONS:
        raise ValueError(f"unknown reduction {method!r}")
    out = list(clusters)
    if len(out) <= k:
        return out
    if method in ("longest", "shortest"):
        sign = -1 if method == "longest" else 1
        ranked = sorted(range(len(out)), key=lambda i: (sign * out[i].total_char_length, i))
        return [out[i] for i in sorted(ranked[:k])]
    while len(out) > k:
        sims = _centroid_sims(out)
        if method == "least":
            small = min(range(len(out)), key=lambda i: (out[i].size, i))
            other = int(np.argmax(sims[small]))
            keep, drop = other, small
        else:
            flat = int(np.argmax(sims))
            keep, drop = sorted(divmod(flat, len(out)))
        out[keep] = out[keep].merged(out[drop])
        del out[drop]
    return out


def summarize_cluster(cluster: SentenceCluster, summarizer: str = "lead_3",
                      endpoint: str | None = None, timeout: float = DEFAULT_TIMEOUT) -> str:
    if summarizer == "remote":
        return remote_summarize(" ".join(cluster.sentences), endpoint, timeout=timeout)
    m = _LEAD.match(summarizer)
    if not m:
        raise ValueError(f"unknown summarizer {summarizer!r}")
    return " ".join(cluster.sentences[: int(m.group(1))])


def run_two_step(content: str, k: int, config: TwoStepConfig | None = None,
                 embedder: EmbeddingProvider | None = None) -> list[str]:
    """Summaries for ``content``, at most ``k`` of them (exactly the cluster count).

    Without an embedder, sentences are embedded with TF-IDF fitted on the
    sentences of this content.  ``k_target="auto"`` clusters by distance
    threshold and skips reduction.
    """
    config = config or TwoStepConfig()
    sentences = split_sentences(content)
    if not sentences:
        return []
    vectors = _embed_sentences(sentences, embedder)
    target = config.k_target if config.k_target is not None else k
    if target != AUTO:
        target = min(int(target), len(sentences))
    clusters = cluster_sentences(sentences, vectors, config, k=target)
    if target != AUTO:
        clusters = reduce_clusters(clusters, k, config.reduction)
    return [summarize_cluster(c, config.summarizer, config.summarizer_endpoint, config.timeout)
            for c in clusters]


def _embed_sentences(sentences: list[str], embedder: EmbeddingProvider | None) -> np.ndarray:
    if embedder is not None:
        return np.asarray(embedder.embed(sentences), dtype=float)
    try:
        return fit_tfidf(sentences).embed(sentences)
    except ValueError:
        # No alphanumeric token anywhere: every sentence is the same zero point.
        return np.zeros((len(sentences), 1))
