"""Multi-summary evaluation: split, count normalization, RougeSum pairing.

A model output is split on ``[SEP]`` into M summaries, brought to the K
references (merge or select when M > K, pad with empty strings when M < K),
paired with the references through the RougeSum table, and scored as the
unweighted mean F1 over the K pairs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import InvalidK, LengthMismatch, MissingPrediction
from .rouge import METRICS, RougeScores, rouge_suite
from .similarity import OverlapScorer, Scorer
from .synthesizer import AdsDataset

NORMALIZE_METHODS = ("closest", "longest", "shortest")
PAIRING_MODES = ("greedy_unique", "argmax_reuse")
PAIRING_ALIASES = {"greedy": "greedy_unique", "reuse": "argmax_reuse"}

_SPLIT = re.compile(r"\s*\[SEP\]\s*")


def split_generated(output_text: str) -> list[str]:
    """Trimmed, non-empty pieces of a ``[SEP]``-delimited output."""
    return [p.strip() for p in _SPLIT.split(output_text) if p.strip()]


def _merge_closest(summaries: list[str], k: int, scorer: Scorer) -> list[str]:
    out = list(summaries)
    while len(out) > k:
        sims = scorer.matrix(out, out)
        best, bi, bj = -math.inf, 0, 1
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                if sims[i, j] > best:
                    best, bi, bj = sims[i, j], i, j
        out[bi] = out[bi] + " " + out.pop(bj)
    return out


def _select_by_length(summaries: list[str], k: int, longest: bool) -> list[str]:
    sign = -1 if longest else 1
    ranked = sorted(range(len(summaries)), key=lambda i: (sign * len(summaries[i]), i))
    keep = sorted(ranked[:k])
    return [summaries[i] for i in keep]


def normalize_count(generated: Sequence[str], k: int, method: str = "closest",
                    scorer: Scorer | None = None) -> list[str]:
    """Force exactly ``k`` summaries.

    Extra summaries are merged (``closest``: the most similar pair is joined,
    earlier text first, into the earlier slot) or filtered (``longest`` /
    ``shortest`` by character length, earlier slot on ties, order kept).
    Missing ones are padded with empty strings.
    """
    if not isinstance(k, int) or k < 1:
        raise InvalidK(f"k must be a positive integer, got {k!r}")
    if method not in NORMALIZE_METHODS:
        raise ValueError(f"unknown normalization {method!r}")
    out = list(generated)
    if len(out) > k:
        if method == "closest":
            out = _merge_closest(out, k, scorer or OverlapScorer())
        else:
            out = _select_by_length(out, k, longest=method == "longest")
    return out + [""] * (k - len(out))


@dataclass
class Pairing:
    assignment: list[tuple[int, int]]
    per_pair: list[RougeScores]
    mode: str
    rouge_sum: np.ndarray = field(repr=False)

    def mean_f1(self) -> dict[str, float]:
        if not self.per_pair:
            return dict.fromkeys(METRICS, 0.0)
        # fsum is exactly rounded, so the mean does not depend on pair order.
        return {
            m: math.fsum(getattr(s, m).f1 for s in self.per_pair) / len(self.per_pair)
            for m in METRICS
        }


def suite_table(generated: Sequence[str], references: Sequence[str]) -> list[list[RougeScores]]:
    return [[rouge_suite(g, r) for r in references] for g in generated]


def greedy_unique(table: np.ndarray, generated: Sequence[str],
                  references: Sequence[str] | None = None) -> list[tuple[int, int]]:
    """Repeatedly take the best remaining cell and retire its row and column.

    Ties prefer the lexicographically smaller generated text, then the smaller
    reference text, then the lower generated and reference indices.  Keying
    ties on text keeps the result independent of the order either side's
    summaries arrive in.
    """
    if references is None:
        references = [""] * table.shape[1]
    rows, cols = set(range(table.shape[0])), set(range(table.shape[1]))
    out = []
    while rows and cols:
        i, j = min(((i, j) for i in rows for j in cols),
                   key=lambda c: (-table[c], generated[c[0]], references[c[1]], c[0], c[1]))
        out.append((i, j))
        rows.discard(i)
        cols.discard(j)
    return sorted(out)


def argmax_reuse(table: np.ndarray) -> list[tuple[int, int]]:
    """Each generated row takes its best reference; first reference on ties."""
    return [(i, int(np.argmax(table[i]))) for i in range(table.shape[0])]


def pair_summaries(generated: Sequence[str], references: Sequence[str],
                   mode: str = "greedy_unique") -> Pairing:
    mode = PAIRING_ALIASES.get(mode, mode)
    if mode not in PAIRING_MODES:
        raise ValueError(f"unknown pairing mode {mode!r}")
    if len(generated) != len(references):
        raise LengthMismatch(f"{len(generated)} generated vs {len(references)} references")
    suites = suite_table(generated, references)
    table = np.array([[s.rouge_sum() for s in row] for row in suites], dtype=float).reshape(
        len(generated), len(references))
    assignment = greedy_unique(table, generated, references) if mode == "greedy_unique" else argmax_reuse(table)
    return Pairing(assignment, [suites[i][j] for i, j in assignment], mode, table)


def evaluate_sample(references: str | Sequence[str], model_output: str, k: int | None = None,
                    normalize_method: str = "closest", mode: str = "greedy_unique",
                    scorer: Scorer | None = None) -> dict[str, float]:
    """Mean F1 per metric over the K generated/reference pairs.

    ``references`` is either the ``[SEP]`` label string or its pieces.
    """
    refs = split_generated(references) if isinstance(references, str) else list(references)
    if k is None:
        k = len(refs)
    if len(refs) != k:
        raise LengthMismatch(f"label splits into {len(refs)} summaries, expected {k}")
    generated = normalize_count(split_generated(model_output), k, normalize_method, scorer)
    return pair_summaries(generated, refs, mode).mean_f1()


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    n = len(values)
    if all(v == values[0] for v in values):
        return float(values[0]), 0.0
    mean = math.fsum(values) / n
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)


@dataclass
class EvalReport:
    seeds: list[int]
    per_seed: dict[int, dict[str, float]]
    per_sample: dict[int, dict[str, dict[str, float]]]
    mean: dict[str, float]
    std: dict[str, float]
    config: dict = field(default_factory=dict)
    divergence: dict | None = None

    def table(self) -> dict[str, str]:
        """Metric -> ``"mean(std)"`` on the x100 scale with two decimals."""
        return {m: f"{self.mean[m] * 100:.2f}({self.std[m] * 100:.2f})" for m in METRICS}

    def to_json(self, include_samples: bool = False) -> dict:
        out = {
            "config": self.config,
            "seeds": self.seeds,
            "metrics": {m: {"mean": self.mean[m] * 100, "std": self.std[m] * 100} for m in METRICS},
            "table": self.table(),
            "per_seed": {str(s): {m: v * 100 for m, v in vals.items()}
                         for s, vals in self.per_seed.items()},
        }
        if self.divergence is not None:
            out["pairing_divergence"] = self.divergence
        if include_samples:
            out["per_sample"] = {str(s): {sid: {m: v * 100 for m, v in vals.items()}
                                          for sid, vals in rows.items()}
                                 for s, rows in self.per_sample.items()}
        return out


PredictionSource = Mapping[str, str] | Callable[[int], Mapping[str, str]]


def _dataset_means(rows: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    n = len(rows)
    return {m: math.fsum(r[m] for r in rows.values()) / n for m in METRICS}


def score_predictions(dataset: AdsDataset, predictions: Mapping[str, str],
                      normalize_method: str = "closest", mode: str = "greedy_unique",
                      scorer: Scorer | None = None, map_fn=map) -> dict[str, dict[str, float]]:
    for s in dataset.samples:
        if s.id not in predictions:
            raise MissingPrediction(s.id)
    jobs = [(s.label, predictions[s.id], s.k, normalize_method, mode, scorer)
            for s in dataset.samples]
    results = map_fn(_evaluate_job, jobs)
    return {s.id: r for s, r in zip(dataset.samples, results)}


def _evaluate_job(args) -> dict[str, float]:
    return evaluate_sample(*args)


def evaluate_dataset(dataset: AdsDataset, predictions: PredictionSource,
                     seeds: Sequence[int] = (0, 10, 42), normalize_method: str = "closest",
                     mode: str = "greedy_unique", scorer: Scorer | None = None,
                     compare_modes: bool = True, map_fn=map) -> EvalReport:
    """Per-seed dataset means, then mean and population std across seeds.

    ``predictions`` is either one id -> output mapping shared by every seed,
    or a callable returning the mapping for a given seed.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    mode = PAIRING_ALIASES.get(mode, mode)
    get = predictions if callable(predictions) else (lambda _seed: predictions)
    per_seed, per_sample, alt = {}, {}, {}
    other = "argmax_reuse" if mode == "greedy_unique" else "greedy_unique"
    for seed in seeds:
        preds = get(seed)
        rows = score_predictions(dataset, preds, normalize_method, mode, scorer, map_fn)
        per_sample[seed] = rows
        per_seed[seed] = _dataset_means(rows)
        if compare_modes:
            alt[seed] = _dataset_means(
                score_predictions(dataset, preds, normalize_method, other, scorer, map_fn))
    stats = {m: mean_std([per_seed[s][m] for s in seeds]) for m in METRICS}
    divergence = None
    if compare_modes and any(alt[s] != per_seed[s] for s in seeds):
        divergence = {
            "mode": other,
            "per_seed": {str(s): {m: alt[s][m] * 100 for m in METRICS} for s in seeds},
            "mean": {m: mean_std([alt[s][m] for s in seeds])[0] * 100 for m in METRICS},
        }
    return EvalReport(
        seeds=list(seeds),
        per_seed=per_seed,
        per_sample=per_sample,
        mean={m: v[0] for m, v in stats.items()},
        std={m: v[1] for m, v in stats.items()},
        config={"normalize": normalize_method, "pairing": mode},
        divergence=divergence,
    )
