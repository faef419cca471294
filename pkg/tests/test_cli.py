import json
import shutil
import subprocess

import pytest

from adsmix.cli import main, read_predictions, run_seed_sweep, seed_path
from adsmix.corpus import write_corpus
from adsmix.synthesizer import read_dataset

from conftest import random_corpus


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_corpus(random_corpus(40, seed=6, split="test"), path)
    return path


def _synth(tmp_path, corpus_file, *extra):
    out = tmp_path / "ds.jsonl"
    code = main(["synth", "--corpus", str(corpus_file), "--split", "test", "--k", "2",
                 "--seed", "0", "--out", str(out), "--jobs", "1", *extra])
    return code, out


def _write_preds(path, rows):
    path.write_text("".join(json.dumps({"id": i, "generated": g}) + "\n" for i, g in rows))
    return path


def test_synth_writes_dataset_and_meta(tmp_path, corpus_file):
    code, out = _synth(tmp_path, corpus_file, "--partition-out", str(tmp_path / "part.json"))
    assert code == 0
    ds = read_dataset(out, "test")
    assert len(ds) == 20 and ds.samples[0].id == "test-k2-0"
    meta = json.loads((tmp_path / "ds.jsonl.meta.json").read_text())
    assert meta["command"] == "synth" and meta["seed"] == 0 and len(meta["sha256"]) == 64
    assert json.loads((tmp_path / "part.json").read_text())["k"] == 2


def test_meta_config_reproduces_bytes(tmp_path, corpus_file):
    _, out = _synth(tmp_path, corpus_file, "--selection", "minsim", "--ordering", "in")
    first = out.read_bytes()
    again = tmp_path / "again.jsonl"
    code = main(["synth", "--config", str(tmp_path / "ds.jsonl.meta.json"), "--out", str(again), "--jobs", "1"])
    assert code == 0
    assert again.read_bytes() == first


def test_variable_k_merge(tmp_path, corpus_file):
    out = tmp_path / "var.jsonl"
    assert main(["synth", "--corpus", str(corpus_file), "--k", "2,3,4", "--out", str(out), "--jobs", "1"]) == 0
    ds = read_dataset(out, "train")
    assert len(ds) == 20 + 13 + 10 and ds.k_values == {2, 3, 4}


def test_seed_sweep_writes_one_file_per_seed(tmp_path, corpus_file, capsys):
    template = tmp_path / "ds.{seed}.jsonl"
    code = main(["synth", "--corpus", str(corpus_file), "--k", "3", "--seeds", "0,10,42",
                 "--out", str(template), "--jobs", "1"])
    assert code == 0
    files = [tmp_path / f"ds.{s}.jsonl" for s in (0, 10, 42)]
    sizes = [len(read_dataset(f, "train")) for f in files]
    assert sizes == [13, 13, 13]
    assert len({f.read_bytes() for f in files}) == 3
    report = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert report["metrics"]["samples"] == {"mean": 13.0, "std": 0.0}


def test_unknown_flag_is_usage_error(capsys):
    assert main(["synth", "--bogus"]) == 1
    assert main(["nope"]) == 1


def test_unknown_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["synth", "--config", str(cfg)]) == 1


def test_k_too_large_is_data_error(tmp_path, corpus_file):
    code, _ = _synth(tmp_path, corpus_file, "--k", "500")
    assert code == 2


def test_eval_report_and_missing_prediction(tmp_path, corpus_file, capsys):
    _, ds_path = _synth(tmp_path, corpus_file)
    ds = read_dataset(ds_path, "test")
    preds = _write_preds(tmp_path / "p.jsonl", [(s.id, s.label) for s in ds])
    out = tmp_path / "report.json"
    assert main(["eval", "--dataset", str(ds_path), "--preds", str(preds), "--k", "2",
                 "--out", str(out), "--jobs", "1"]) == 0
    report = json.loads(out.read_text())
    assert report["metrics"]["rouge1"] == {"mean": 100.0, "std": 0.0}
    assert report["seeds"] == [0, 10, 42]
    assert report["table"]["rougeLsum"] == "100.00(0.00)"

    _write_preds(preds, [(s.id, s.label) for s in ds.samples[1:]])
    capsys.readouterr()
    assert main(["eval", "--dataset", str(ds_path), "--preds", str(preds), "--jobs", "1"]) == 2
    assert ds.samples[0].id in capsys.readouterr().err


def test_eval_per_seed_predictions(tmp_path, corpus_file):
    _, ds_path = _synth(tmp_path, corpus_file)
    ds = read_dataset(ds_path, "test")
    _write_preds(tmp_path / "p0.jsonl", [(s.id, s.label) for s in ds])
    _write_preds(tmp_path / "p1.jsonl", [(s.id, "") for s in ds])
    out = tmp_path / "r.json"
    assert main(["eval", "--dataset", str(ds_path), "--preds", str(tmp_path / "p{seed}.jsonl"),
                 "--seeds", "0,1", "--out", str(out), "--jobs", "1"]) == 0
    assert json.loads(out.read_text())["metrics"]["rouge1"] == {"mean": 50.0, "std": 50.0}


def test_analyze_and_baseline(tmp_path, corpus_file):
    _, ds_path = _synth(tmp_path, corpus_file)
    preds = tmp_path / "base.jsonl"
    assert main(["baseline", "--dataset", str(ds_path), "--out", str(preds), "--jobs", "1"]) == 0
    rows = read_predictions(preds)
    assert len(rows) == 20
    out = tmp_path / "an.json"
    assert main(["analyze", "--dataset", str(ds_path), "--preds", str(preds), "--seeds", "0",
                 "--out", str(out), "--jobs", "1"]) == 0
    report = json.loads(out.read_text())
    assert 0.0 <= report["metrics"]["f1_mean"]["mean"] <= 1.0


def test_parallel_eval_matches_serial(tmp_path, corpus_file):
    _, ds_path = _synth(tmp_path, corpus_file)
    preds = tmp_path / "base.jsonl"
    main(["baseline", "--dataset", str(ds_path), "--out", str(preds), "--jobs", "1"])
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"r{jobs}.json"
        main(["eval", "--dataset", str(ds_path), "--preds", str(preds), "--out", str(out), "--jobs", jobs])
        outs.append(json.loads(out.read_text())["metrics"])
    assert outs[0] == outs[1]


def test_service_error_exit_code(tmp_path, corpus_file, dead_url, monkeypatch):
    monkeypatch.setattr("adsmix.service.BACKOFF", 0.01)
    code, _ = _synth(tmp_path, corpus_file, "--selection", "minsim", "--embed-url", dead_url)
    assert code == 3


def test_rouge_and_stats_commands(tmp_path, corpus_file):
    (tmp_path / "c.txt").write_text("the cat sat on the mat")
    (tmp_path / "r.txt").write_text("the cat is on the mat")
    out = tmp_path / "rouge.json"
    assert main(["rouge", "--cand", str(tmp_path / "c.txt"), "--ref", str(tmp_path / "r.txt"),
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["scores"]["rouge1"]["f1"] == pytest.approx(83.333, abs=1e-3)
    out = tmp_path / "stats.json"
    assert main(["stats", "--corpus", str(corpus_file), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["stats"]["count"] == 40


def test_seed_helpers():
    assert seed_path("a.{seed}.jsonl", 10, True) == "a.10.jsonl"
    assert seed_path("a.jsonl", 10, True) == "a.seed10.jsonl"
    assert seed_path("a.jsonl", 10, False) == "a.jsonl"
    sweep = run_seed_sweep([0, 10], lambda s: {"x": s, "tag": "t"})
    assert sweep["metrics"] == {"x": {"mean": 5.0, "std": 5.0}}
    assert sweep["per_seed"]["10"]["tag"] == "t"


def test_console_script_runs():
    exe = shutil.which("adsmix")
    if exe is None:
        pytest.skip("console script not installed")
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "adsmix" in proc.stdout
