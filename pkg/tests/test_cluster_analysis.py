import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from adsmix.corpus import Corpus
from adsmix.cluster_analysis import analyze_sample, assign_sentences, best_mapping_f1, cluster_report
from adsmix.errors import MissingPrediction, NoSummaries, TooManyClusters
from adsmix.synthesizer import AdsDataset, synthesize_dataset

from conftest import random_corpus, topic_article


def test_assign_hand_scored_instance():
    # overlap F1: "a b"->(0.8, 0), "c d"->(0, 0.8), "a c"->(0.4, 0.4) resolved to the first summary.
    assert assign_sentences(["a b", "c d", "a c"], ["a b x", "c d y"]) == [0, 1, 0]


def test_assign_single_summary_and_empty_summaries():
    assert assign_sentences(["x", "y z"], ["q"]) == [0, 0]
    assert assign_sentences(["a b"], ["", "a b"]) == [1]
    with pytest.raises(NoSummaries):
        assign_sentences(["a"], ["", "  "])


def test_assign_verbatim_sources():
    srcs = ["storm hits the coast tonight", "senate vote is delayed again"]
    assert assign_sentences(srcs[::-1] + srcs, srcs) == [1, 0, 0, 1]


def test_mapping_identity_and_renaming():
    truth = [0, 0, 1, 2, 2, 1]
    assert best_mapping_f1(truth, truth)[1] == 1.0
    renamed = [{0: "z", 1: "x", 2: "y"}[t] for t in truth]
    mapping, f1 = best_mapping_f1(renamed, truth)
    assert f1 == 1.0 and mapping == {"x": 1, "y": 2, "z": 0}


def test_mapping_extra_cluster_maps_to_none():
    mapping, f1 = best_mapping_f1([0, 1, 2, 2], ["a", "b", "b", "b"])
    assert list(mapping.values()).count(None) == 1
    assert f1 == pytest.approx(float(oracles.best_macro_f1([0, 1, 2, 2], ["a", "b", "b", "b"])))


def test_mapping_fewer_clusters_than_classes():
    # One cluster for two equal classes: best F1 for the matched class is 2/3, the other scores 0.
    assert best_mapping_f1([0, 0, 0, 0], ["a", "a", "b", "b"])[1] == pytest.approx(1 / 3)


def test_mapping_limits_and_lengths():
    with pytest.raises(TooManyClusters):
        best_mapping_f1(list(range(9)), [0] * 9)
    with pytest.raises(ValueError):
        best_mapping_f1([0], [0, 1])


def test_random_12_point_three_class_instance():
    rng = random.Random(12)
    pred = [rng.randrange(3) for _ in range(12)]
    truth = [rng.randrange(3) for _ in range(12)]
    assert Fraction(best_mapping_f1(pred, truth)[1]) == Fraction(float(oracles.best_macro_f1(pred, truth)))


labelings = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=14)


@settings(max_examples=150, deadline=None)
@given(labelings, st.permutations(range(4)), st.permutations(range(4)))
def test_mapping_invariants(pairs, rename_p, rename_t):
    pred, truth = [p for p, _ in pairs], [t for _, t in pairs]
    _, f1 = best_mapping_f1(pred, truth)
    assert f1 == float(oracles.best_macro_f1(pred, truth))
    assert best_mapping_f1([rename_p[p] for p in pred], [rename_t[t] for t in truth])[1] == f1
    assert best_mapping_f1(pred, pred)[1] == 1.0
    assert 0.0 <= f1 <= 1.0


def _dataset(k=3):
    return synthesize_dataset(random_corpus(30, seed=8, split="test"), k, seed=0)


def test_report_with_label_predictions():
    ds = _dataset(3)
    report = cluster_report(ds, {s.id: s.label for s in ds})
    assert report.count_mean == 3.0 and report.count_std == 0.0
    assert 0.0 <= report.f1_mean <= 1.0
    assert report.to_json()["table"]["clusters"] == "3.00(0.00)"


def test_report_verbatim_sources_score_one():
    rng = random.Random(3)
    corpus = Corpus([topic_article(rng, f"d{i}", i) for i in range(8)], "test")
    ds = synthesize_dataset(corpus, 2, seed=0)
    preds = {s.id: " [SEP] ".join(corpus.by_id(i).text for i in s.source_ids) for s in ds}
    report = cluster_report(ds, preds)
    assert report.count_mean == 2.0
    assert [r["f1"] for r in report.per_sample] == [1.0] * len(ds)


def test_empty_prediction_scores_zero():
    s = _dataset(2).samples[0]
    assert analyze_sample(s, "") == {"id": s.id, "clusters": 0, "f1": 0.0}


def test_missing_prediction():
    with pytest.raises(MissingPrediction):
        cluster_report(_dataset(2), {})
    assert cluster_report(AdsDataset([], "test"), {}).count_mean == 0.0
