"""Clustering quality of generated summaries.

Each generated sub-summary is one predicted cluster; every content sentence
joins the summary it scores highest against, and the resulting labeling is
compared with the true source articles under the best label mapping.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import MissingPrediction, NoSummaries, TooManyClusters
from .evaluator import mean_std, split_generated
from .similarity import OverlapScorer, Scorer
from .synthesizer import AdsDataset, AdsSample

MAX_LABELS = 8


def assign_sentences(sentences: Sequence[str], summaries: Sequence[str],
                     scorer: Scorer | None = None) -> list[int]:
    """Index of the best-scoring summary for each sentence (lowest index on ties)."""
    if not any(s.strip() for s in summaries):
        raise NoSummaries("no non-empty summary to assign sentences to")
    if not sentences:
        return []
    scorer = scorer or OverlapScorer()
    live = [j for j, s in enumerate(summaries) if s.strip()]
    scores = np.zeros((len(sentences), len(summaries)))
    scores[:, live] = scorer.matrix(list(sentences), [summaries[j] for j in live])
    return [int(np.argmax(row)) for row in scores]


def best_mapping_f1(pred: Sequence[Hashable], truth: Sequence[Hashable]):
    """Best macro-F1 over injective predicted -> true label maps.

    Returns ``(mapping, f1)``: ``mapping`` sends each predicted label (sorted)
    to a true label or ``None`` when there are more predicted clusters than
    true classes.  Macro-F1 averages over true classes; a class that receives
    no predicted cluster scores 0.  Every candidate map is scored exactly, and
    the first maximum in enumeration order wins.
    """
    if len(pred) != len(truth):
        raise ValueError("pred and truth differ in length")
    p_labels = sorted(set(pred), key=repr)
    t_labels = sorted(set(truth), key=repr)
    if len(p_labels) > MAX_LABELS or len(t_labels) > MAX_LABELS:
        raise TooManyClusters(
            f"{len(p_labels)} predicted / {len(t_labels)} true labels; limit is {MAX_LABELS}")
    if not t_labels:
        return {}, 0.0
    p_index = {lab: i for i, lab in enumerate(p_labels)}
    t_index = {lab: i for i, lab in enumerate(t_labels)}
    contingency = np.zeros((len(p_labels), len(t_labels)), dtype=np.int64)
    for p, t in zip(pred, truth):
        contingency[p_index[p], t_index[t]] += 1
    p_size = contingency.sum(axis=1)
    t_size = contingency.sum(axis=0)

    # F1 of predicted cluster a as class b is 2*tp / (|a| + |b|); put every cell
    # on a common denominator so map totals are exact integers.
    denom = math.lcm(*(int(p_size[a] + t_size[b]) for a in range(len(p_labels))
                       for b in range(len(t_labels))))
    gain = [[2 * int(contingency[a, b]) * (denom // int(p_size[a] + t_size[b]))
             for b in range(len(t_labels))] for a in range(len(p_labels))]

    pool = list(range(len(t_labels))) + [None] * max(0, len(p_labels) - len(t_labels))
    best_total, best_map = -1, None
    for targets in itertools.permutations(pool, len(p_labels)):
        total = sum(gain[a][b] for a, b in enumerate(targets) if b is not None)
        if total > best_total:
            best_total, best_map = total, targets
    mapping = {p_labels[a]: (None if b is None else t_labels[b]) for a, b in enumerate(best_map)}
    return mapping, float(Fraction(best_total, denom * len(t_labels)))


@dataclass
class ClusterReport:
    count_mean: float
    count_std: float
    f1_mean: float
    f1_std: float
    per_sample: list[dict] = field(default_factory=list)

    def to_json(self, include_samples: bool = True) -> dict:
        out = {
            "clusters": {"mean": self.count_mean, "std": self.count_std},
            "f1": {"mean": self.f1_mean, "std": self.f1_std},
            "table": {
                "clusters": f"{self.count_mean:.2f}({self.count_std:.2f})",
                "f1": f"{self.f1_mean:.2f}({self.f1_std:.2f})",
            },
        }
        if include_samples:
            out["per_sample"] = self.per_sample
        return out


def analyze_sample(sample: AdsSample, generated: str, scorer: Scorer | None = None) -> dict:
    summaries = split_generated(generated)
    record = {"id": sample.id, "clusters": len(summaries)}
    sentences = sample.sentences()
    if not summaries:
        record["f1"] = 0.0
        return record
    labels = assign_sentences(sentences, summaries, scorer)
    source_pos = {sid: i for i, sid in enumerate(sample.source_ids)}
    truth = [source_pos[sid] for sid, _ in sample.sentence_provenance]
    _, f1 = best_mapping_f1(labels, truth)
    record["f1"] = f1
    return record


def _analyze_job(args) -> dict:
    return analyze_sample(*args)


def cluster_report(dataset: AdsDataset, predictions: Mapping[str, str],
                   scorer: Scorer | None = None, map_fn=map) -> ClusterReport:
    """Cluster counts and mapped macro-F1, per sample and aggregated.

    Generated summaries are used as split, without count normalization.
    """
    for s in dataset.samples:
        if s.id not in predictions:
            raise MissingPrediction(s.id)
    if not dataset.samples:
        return ClusterReport(0.0, 0.0, 0.0, 0.0)
    records = list(map_fn(_analyze_job, [(s, predictions[s.id], scorer) for s in dataset.samples]))
    c_mean, c_std = mean_std([r["clusters"] for r in records])
    f_mean, f_std = mean_std([r["f1"] for r in records])
    return ClusterReport(c_mean, c_std, f_mean, f_std, records)
