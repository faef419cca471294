import random

import numpy as np
import pytest

from adsmix.errors import ServiceUnreachable, TooFewSentences
from adsmix.service import SUMM_ENV
from adsmix.twostep import (
    SentenceCluster,
    TwoStepConfig,
    agglomerative_labels,
    cluster_sentences,
    kmeans_labels,
    reduce_clusters,
    run_two_step,
    summarize_cluster,
)

from conftest import topic_article


def _blobs(seed=0, n=20):
    rng = np.random.default_rng(seed)
    a = rng.normal([5, 0, 0], 0.3, size=(n, 3))
    b = rng.normal([0, 5, 0], 0.3, size=(n, 3))
    pts = np.vstack([a, b])
    order = rng.permutation(2 * n)
    return pts[order], (order >= n).astype(int)


def _same_partition(labels, truth):
    pairs = {(l, t) for l, t in zip(labels, truth)}
    return len(pairs) == len(set(labels)) == len(set(truth))


@pytest.mark.parametrize("seed", [0, 10, 42])
def test_kmeans_separates_blobs(seed):
    pts, truth = _blobs(seed)
    labels = kmeans_labels(pts, 2, seed=seed)
    assert _same_partition(labels, truth)
    assert kmeans_labels(pts, 2, seed=seed) == labels


def test_agglomerative_separates_blobs_and_threshold():
    pts, truth = _blobs(1)
    assert _same_partition(agglomerative_labels(pts, k=2), truth)
    assert _same_partition(agglomerative_labels(pts, threshold=0.5), truth)


def test_cluster_sentences_edge_counts():
    sents = ["a", "b", "c"]
    vecs = np.eye(3)
    for clusterer in ("kmeans", "agglomerative"):
        cfg = TwoStepConfig(clusterer=clusterer)
        assert [c.positions for c in cluster_sentences(sents, vecs, cfg, k=1)] == [[0, 1, 2]]
        assert [c.positions for c in cluster_sentences(sents, vecs, cfg, k=3)] == [[0], [1], [2]]
        with pytest.raises(TooFewSentences):
            cluster_sentences(sents, vecs, cfg, k=4)


def _cluster(positions, vecs, text="s"):
    return SentenceCluster(list(positions), [f"{text}{p}" for p in positions], np.array(vecs, dtype=float))


def _three():
    a = _cluster([0], [(1, 0)])
    b = _cluster([1, 2], [(0, 1), (0, 1)])
    c = _cluster([3, 4], [(0.1, 1), (0.1, 1)])
    return [a, b, c]


def test_reduce_closest_hand_trace():
    # Centroid cosines: (b, c) ~ 0.995 is the largest, so b absorbs c.
    out = reduce_clusters(_three(), 2, "closest")
    assert [c.positions for c in out] == [[0], [1, 2, 3, 4]]


def test_reduce_least_hand_trace():
    # a is smallest; its most similar neighbour is c (cos ~ 0.0995 vs 0).
    out = reduce_clusters(_three(), 2, "least")
    assert [c.positions for c in out] == [[1, 2], [0, 3, 4]]


def test_reduce_by_length():
    clusters = [_cluster([0], [(1, 0)], "x" * 9), _cluster([1], [(0, 1)], "y"), _cluster([2], [(1, 1)], "zzz")]
    assert [c.positions for c in reduce_clusters(clusters, 2, "longest")] == [[0], [2]]
    assert [c.positions for c in reduce_clusters(clusters, 2, "shortest")] == [[1], [2]]
    assert reduce_clusters(clusters, 5, "least") == clusters


def test_reduce_rejects_bad_args():
    with pytest.raises(ValueError):
        reduce_clusters(_three(), 0)
    with pytest.raises(ValueError):
        reduce_clusters(_three(), 2, "median")


def test_config_validation():
    with pytest.raises(ValueError):
        TwoStepConfig(clusterer="dbscan")
    with pytest.raises(ValueError):
        TwoStepConfig(summarizer="lead_0")
    assert TwoStepConfig(summarizer="lead5").summarizer == "lead5"


def test_lead_n_summarizer():
    c = SentenceCluster([0, 1, 2, 3], ["A.", "B.", "C.", "D."], np.zeros((4, 1)))
    assert summarize_cluster(c, "lead_3") == "A. B. C."
    assert summarize_cluster(c, "lead_1") == "A."
    assert summarize_cluster(c, "lead_9") == "A. B. C. D."


def test_remote_summarizer(stub_service, monkeypatch):
    monkeypatch.setenv(SUMM_ENV, stub_service.url)
    c = SentenceCluster([0, 1], ["One.", "Two."], np.zeros((2, 1)))
    assert summarize_cluster(c, "remote") == "stub: One. Two."
    assert stub_service.calls == [("/summarize", {"text": "One. Two."})]


def test_remote_summarizer_unreachable(dead_url, monkeypatch):
    monkeypatch.setattr("adsmix.service.BACKOFF", 0.01)
    c = SentenceCluster([0], ["One."], np.zeros((1, 1)))
    with pytest.raises(ServiceUnreachable):
        summarize_cluster(c, "remote", endpoint=dead_url, timeout=1.0)


def _two_topic_content(seed):
    rng = random.Random(seed)
    arts = [topic_article(rng, "a", 0), topic_article(rng, "b", 1)]
    sents = [s for art in arts for s in art.text.split(". ")]
    rng.shuffle(sents)
    return " ".join(s if s.endswith(".") else s + "." for s in sents)


@pytest.mark.parametrize("clusterer", ["kmeans", "agglomerative"])
def test_run_two_step_topic_purity(clusterer):
    cfg = TwoStepConfig(clusterer=clusterer, summarizer="lead_100")
    for seed in range(5):
        summaries = run_two_step(_two_topic_content(seed), 2, cfg)
        assert len(summaries) == 2
        topics = [{w[:2] for w in s.replace(".", "").split()} for s in summaries]
        assert all(len(t) == 1 for t in topics) and topics[0] != topics[1]


def test_run_two_step_caps_and_edge_cases():
    assert run_two_step("", 3) == []
    assert run_two_step("Only one sentence.", 3) == ["Only one sentence."]
    assert len(run_two_step("!!! ??? ...", 2)) == 1
    auto = run_two_step(_two_topic_content(0), 2, TwoStepConfig(k_target="auto"))
    assert len(auto) >= 1


def test_run_two_step_is_deterministic():
    content = _two_topic_content(3)
    cfg = TwoStepConfig(seed=42)
    assert run_two_step(content, 2, cfg) == run_two_step(content, 2, cfg)
