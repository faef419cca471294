"""Text embeddings and similarity scorers.

Every scorer exposes ``score(a, b)`` for one pair and ``matrix(rows, cols)``
for a full table; callers that pick an argmax only ever use one of the two
per decision, so tie-breaking sees a single consistent set of numbers.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Protocol, Sequence

import numpy as np
from sklearn.feature_extraction.text import TfidfVectorizer

from .errors import DimensionMismatch, EmptyInput
from .service import DEFAULT_TIMEOUT, RemoteEmbedder

SCORER_KINDS = ("token_overlap_f1", "tfidf_cosine", "remote_embedding_cosine")
SCORER_ALIASES = {"overlap": "token_overlap_f1", "tfidf": "tfidf_cosine",
                  "remote": "remote_embedding_cosine"}

_TOKEN = r"[^\W_]+"
_TOKEN_RE = re.compile(_TOKEN)


def word_tokens(text: str) -> list[str]:
    """Lowercased alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


class EmbeddingProvider(Protocol):
    def embed(self, texts: list[str]) -> np.ndarray: ...


class TfidfEmbedder:
    """L2-normalized TF-IDF vectors over a fixed fitted vocabulary.

    Raw term counts times ``ln((1 + N) / (1 + df)) + 1``; texts with no
    in-vocabulary token embed to the zero vector.
    """

    def __init__(self, vectorizer: TfidfVectorizer):
        self._vec = vectorizer
        self.dim = len(vectorizer.vocabulary_)

    @property
    def vocabulary(self) -> list[str]:
        return list(self._vec.get_feature_names_out())

    def embed(self, texts: list[str]) -> np.ndarray:
        return self._vec.transform(list(texts)).toarray()


def fit_tfidf(texts: Sequence[str]) -> TfidfEmbedder:
    texts = list(texts)
    if not any(_TOKEN_RE.search(t.lower()) for t in texts):
        raise EmptyInput("no tokens to fit a TF-IDF vocabulary on")
    vec = TfidfVectorizer(lowercase=True, token_pattern=_TOKEN, smooth_idf=True,
                          sublinear_tf=False, norm="l2", dtype=np.float64)
    vec.fit(texts)
    return TfidfEmbedder(vec)


def cosine_similarity(a, b) -> float:
    """Cosine of two vectors; 0 when either is the zero vector."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(min(1.0, max(-1.0, np.dot(a, b) / (na * nb))))


def unit_rows(mat: np.ndarray) -> np.ndarray:
    """Row-normalize, leaving zero rows at zero."""
    mat = np.asarray(mat, dtype=float)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return mat / safe


def cosine_matrix(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(rows)
    cols = np.atleast_2d(cols)
    if rows.shape[1] != cols.shape[1]:
        raise DimensionMismatch(f"dimensions differ: {rows.shape[1]} vs {cols.shape[1]}")
    return np.clip(unit_rows(rows) @ unit_rows(cols).T, -1.0, 1.0)


def token_overlap_f1(a: str, b: str) -> float:
    ta, tb = Counter(word_tokens(a)), Counter(word_tokens(b))
    if not ta or not tb:
        return 0.0
    overlap = sum((ta & tb).values())
    if overlap == 0:
        return 0.0
    p = overlap / sum(ta.values())
    r = overlap / sum(tb.values())
    return 2 * p * r / (p + r)


class OverlapScorer:
    kind = "token_overlap_f1"

    def score(self, a: str, b: str) -> float:
        return token_overlap_f1(a, b)

    def matrix(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        return np.array([[token_overlap_f1(r, c) for c in cols] for r in rows], dtype=float).reshape(
            len(rows), len(cols))


class _EmbeddingScorer:
    def _provider(self, texts: list[str]) -> EmbeddingProvider | None:
        raise NotImplementedError

    def score(self, a: str, b: str) -> float:
        provider = self._provider([a, b])
        if provider is None:
            return 0.0
        va, vb = provider.embed([a, b])
        return cosine_similarity(va, vb)

    def matrix(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        rows, cols = list(rows), list(cols)
        if not rows or not cols:
            return np.zeros((len(rows), len(cols)))
        provider = self._provider(rows + cols)
        if provider is None:
            return np.zeros((len(rows), len(cols)))
        vecs = provider.embed(rows + cols)
        return cosine_matrix(vecs[: len(rows)], vecs[len(rows):])


class TfidfScorer(_EmbeddingScorer):
    """TF-IDF cosine; without a fitted provider, fits on the texts being compared."""

    kind = "tfidf_cosine"

    def __init__(self, provider: TfidfEmbedder | None = None):
        self.provider = provider

    def _provider(self, texts):
        if self.provider is not None:
            return self.provider
        try:
            return fit_tfidf(texts)
        except EmptyInput:
            return None


class RemoteScorer(_EmbeddingScorer):
    kind = "remote_embedding_cosine"

    def __init__(self, endpoint: str | None = None, timeout: float = DEFAULT_TIMEOUT):
        self.embedder = RemoteEmbedder(endpoint, timeout=timeout)

    def _provider(self, texts):
        return self.embedder

    def score(self, a: str, b: str) -> float:
        # Blank texts never reach the service.
        if not a.strip() or not b.strip():
            return 0.0
        return super().score(a, b)

    def matrix(self, rows, cols):
        rows, cols = list(rows), list(cols)
        out = np.zeros((len(rows), len(cols)))
        ri = [i for i, t in enumerate(rows) if t.strip()]
        ci = [j for j, t in enumerate(cols) if t.strip()]
        if ri and ci:
            sub = super().matrix([rows[i] for i in ri], [cols[j] for j in ci])
            out[np.ix_(ri, ci)] = sub
        return out


Scorer = OverlapScorer | TfidfScorer | RemoteScorer


def make_scorer(kind: str = "token_overlap_f1", endpoint: str | None = None,
                timeout: float = DEFAULT_TIMEOUT) -> Scorer:
    kind = SCORER_ALIASES.get(kind, kind)
    if kind == "token_overlap_f1":
        return OverlapScorer()
    if kind == "tfidf_cosine":
        return TfidfScorer()
    if kind == "remote_embedding_cosine":
        return RemoteScorer(endpoint, timeout=timeout)
    raise ValueError(f"unknown scorer kind {kind!r}; expected one of {SCORER_KINDS}")
