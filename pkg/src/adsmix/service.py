"""JSON-over-HTTP clients for the embedding and summarization services.

Wire formats::

    POST {endpoint}/embed      {"texts": [str]}  -> {"vectors": [[float]]}
    POST {endpoint}/summarize  {"text": str}     -> {"summary": str}

Connection failures, timeouts and 5xx responses are retried twice with
exponential backoff before surfacing as a ``ServiceError``.
"""

from __future__ import annotations

import os
import time
from typing import Any

import httpx
import numpy as np

from .errors import BadResponse, ServiceTimeout, ServiceUnreachable

EMBED_ENV = "ADS_EMBED_URL"
SUMM_ENV = "ADS_SUMM_URL"

DEFAULT_TIMEOUT = 30.0
RETRIES = 2
BACKOFF = 0.25


def resolve_endpoint(endpoint: str | None, env_var: str) -> str:
    url = endpoint or os.environ.get(env_var)
    if not url:
        raise ServiceUnreachable(f"no endpoint given and ${env_var} is unset")
    return url.rstrip("/")


def post_json(url: str, payload: dict, timeout: float = DEFAULT_TIMEOUT,
              retries: int = RETRIES, backoff: float = BACKOFF) -> Any:
    last: Exception | None = None
    for attempt in range(retries + 1):
        if attempt:
            time.sleep(backoff * 2 ** (attempt - 1))
        try:
            resp = httpx.post(url, json=payload, timeout=timeout)
        except httpx.TimeoutException as exc:
            last = ServiceTimeout(f"{url}: timed out after {timeout}s")
            last.__cause__ = exc
            continue
        except httpx.TransportError as exc:
            last = ServiceUnreachable(f"{url}: {exc}")
            last.__cause__ = exc
            continue
        if resp.status_code >= 500:
            last = BadResponse(f"{url}: HTTP {resp.status_code}")
            continue
        if resp.status_code != 200:
            raise BadResponse(f"{url}: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError:
            raise BadResponse(f"{url}: response is not JSON") from None
    assert last is not None
    raise last


class RemoteEmbedder:
    """Embedding provider backed by the ``/embed`` endpoint."""

    def __init__(self, endpoint: str | None = None, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = resolve_endpoint(endpoint, EMBED_ENV)
        self.timeout = timeout
        self.dim: int | None = None

    def embed(self, texts: list[str]) -> np.ndarray:
        arr = remote_embed(texts, self.endpoint, timeout=self.timeout, expected_dim=self.dim)
        self.dim = arr.shape[1]
        return arr


def remote_embed(texts: list[str], endpoint: str | None = None,
                 timeout: float = DEFAULT_TIMEOUT, expected_dim: int | None = None) -> np.ndarray:
    """One vector per text, in input order, as an ``(n, dim)`` array."""
    texts = list(texts)
    if not texts:
        raise ValueError("texts must be a non-empty list")
    url = resolve_endpoint(endpoint, EMBED_ENV) + "/embed"
    body = post_json(url, {"texts": texts}, timeout=timeout)
    vectors = body.get("vectors") if isinstance(body, dict) else None
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        got = len(vectors) if isinstance(vectors, list) else "no"
        raise BadResponse(f"expected {len(texts)} vectors, got {got}")
    dims = {len(v) if isinstance(v, list) else -1 for v in vectors}
    if len(dims) != 1 or min(dims) <= 0:
        raise BadResponse("ragged or empty vectors in response")
    try:
        arr = np.asarray(vectors, dtype=float)
    except (TypeError, ValueError):
        raise BadResponse("non-numeric vector entries") from None
    if not np.all(np.isfinite(arr)):
        raise BadResponse("non-finite vector entries")
    dim = arr.shape[1]
    if expected_dim is not None and dim != expected_dim:
        raise BadResponse(f"dimension changed from {expected_dim} to {dim}")
    return arr


def remote_summarize(text: str, endpoint: str | None = None,
                     timeout: float = DEFAULT_TIMEOUT) -> str:
    url = resolve_endpoint(endpoint, SUMM_ENV) + "/summarize"
    body = post_json(url, {"text": text}, timeout=timeout)
    summary = body.get("summary") if isinstance(body, dict) else None
    if not isinstance(summary, str):
        raise BadResponse("response lacks a string 'summary'")
    return summary
