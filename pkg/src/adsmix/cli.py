"""``adsmix`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 service error.
Diagnostics go to stderr; reports go to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .cluster_analysis import cluster_report
from .corpus import SPLITS, corpus_stats, load_corpus
from .errors import DataError, MalformedLine, ServiceError
from .evaluator import NORMALIZE_METHODS, evaluate_dataset, mean_std
from .rouge import rouge_suite
from .sampler import partition
from .service import EMBED_ENV, RemoteEmbedder
from .similarity import make_scorer
from .synthesizer import (
    ORDERING_ALIASES,
    AdsDataset,
    dataset_stats,
    merge_variable,
    read_dataset,
    synthesize_from_partition,
    write_dataset,
)
from .twostep import AUTO, TwoStepConfig, run_two_step

log = logging.getLogger("adsmix")

DEFAULT_SEEDS = (0, 10, 42)
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SERVICE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be integers: {text!r}")
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return ks


def _k_or_auto(text: str):
    if text == AUTO:
        return AUTO
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer or 'auto': {text!r}")
    if k < 1:
        raise argparse.ArgumentTypeError("k must be >= 1")
    return k


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for per-sample stages")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="adsmix", description="ADS dataset synthesis and evaluation")
    parser.add_argument("--version", action="version", version=f"adsmix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="synthesize an ADS dataset from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=SPLITS, default="train")
    p.add_argument("--k", type=_k_list, required=True,
                   help="summary number; several (e.g. 2,3,4) produce a merged variable-K set")
    p.add_argument("--selection", choices=["random", "minsim"], default="random")
    p.add_argument("--aggregation", choices=["min", "mean"], default="min")
    p.add_argument("--ordering", choices=sorted(ORDERING_ALIASES), default="cross")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int)
    group.add_argument("--seeds", type=_seed_list)
    p.add_argument("--embed-url", help=f"embedding service for minsim (default ${EMBED_ENV}, else TF-IDF)")
    p.add_argument("--partition-out", help="also write the partition audit JSON here")
    p.add_argument("--out", required=True, help="dataset JSONL; '{seed}' is expanded per seed")

    p = sub.add_parser("eval", parents=[common], help="score predictions against dataset labels")
    p.add_argument("--dataset", required=True)
    p.add_argument("--preds", required=True, help="predictions JSONL; '{seed}' is expanded per seed")
    p.add_argument("--k", type=int, help="require every sample to have this summary number")
    p.add_argument("--normalize", choices=NORMALIZE_METHODS, default="closest")
    p.add_argument("--pairing", choices=["greedy", "reuse"], default="greedy")
    p.add_argument("--scorer", choices=["overlap", "tfidf", "remote"], default="overlap",
                   help="similarity used by closest merging")
    p.add_argument("--embed-url")
    p.add_argument("--seeds", type=_seed_list, default=list(DEFAULT_SEEDS))
    p.add_argument("--per-sample", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("analyze", parents=[common], help="clustering quality of predictions")
    p.add_argument("--dataset", required=True)
    p.add_argument("--preds", required=True, help="predictions JSONL; '{seed}' is expanded per seed")
    p.add_argument("--scorer", choices=["overlap", "tfidf", "remote"], default="overlap")
    p.add_argument("--embed-url")
    p.add_argument("--seeds", type=_seed_list, default=list(DEFAULT_SEEDS))
    p.add_argument("--per-sample", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("baseline", parents=[common], help="run the two-step baseline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=_k_or_auto, help="cluster target; default each sample's k")
    p.add_argument("--clusterer", choices=["kmeans", "agglomerative"], default="kmeans")
    p.add_argument("--reduction", choices=["least", "closest", "longest", "shortest"], default="least")
    p.add_argument("--summarizer", default="lead3", help="leadN or remote")
    p.add_argument("--embedder", choices=["tfidf", "remote"], default="tfidf")
    p.add_argument("--embed-url")
    p.add_argument("--summ-url")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int)
    group.add_argument("--seeds", type=_seed_list)
    p.add_argument("--out", required=True, help="predictions JSONL; '{seed}' is expanded per seed")

    p = sub.add_parser("rouge", parents=[common], help="ROUGE of one candidate file vs one reference")
    p.add_argument("--cand", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out")

    p = sub.add_parser("stats", parents=[common], help="length statistics")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus")
    src.add_argument("--dataset", action="append")
    p.add_argument("--split", choices=SPLITS)
    p.add_argument("--out")
    return parser


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if isinstance(cfg, dict) and isinstance(cfg.get("config"), dict):
        cfg = cfg["config"]
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return cfg


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in COMMANDS), None)
    if early.config and command:
        cfg = _load_config(early.config)
        subparser = _subparser(parser, command)
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(cfg) - known - {"command"})
        if unknown:
            raise UsageError(f"unknown keys in config: {', '.join(unknown)}")
        for action in subparser._actions:
            if action.dest in cfg:
                action.required = False
        subparser.set_defaults(**{k: v for k, v in cfg.items() if k in known})
    return parser.parse_args(argv)


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def resolved_config(args: argparse.Namespace) -> dict:
    skip = {"config", "jobs", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _with_tag(path: str, tag: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{tag}{p.suffix}"))


def seed_path(template: str, seed: int, multi: bool) -> str:
    if "{seed}" in template:
        return template.replace("{seed}", str(seed))
    if not multi:
        return template
    return _with_tag(template, f"seed{seed}")


def run_seed_sweep(seeds: Sequence[int], run_one: Callable[[int], dict]) -> dict:
    """Run once per seed and merge numeric results into mean/std.

    ``run_one`` returns a flat dict; numeric values are aggregated, anything
    else is kept per seed only.  A failing seed aborts the sweep.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    per_seed = {}
    for seed in seeds:
        per_seed[seed] = run_one(seed)
    keys = [k for k, v in per_seed[seeds[0]].items()
            if isinstance(v, (int, float)) and not isinstance(v, bool)]
    metrics = {}
    for key in keys:
        mean, std = mean_std([float(per_seed[s][key]) for s in seeds])
        metrics[key] = {"mean": mean, "std": std}
    return {"seeds": list(seeds), "per_seed": {str(s): per_seed[s] for s in seeds},
            "metrics": metrics}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_meta(artifact: str, command: str, config: dict, seed: int | None) -> None:
    meta = {
        "tool": "adsmix",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "sha256": _sha256(artifact),
    }
    with open(artifact + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _header(args: argparse.Namespace) -> dict:
    return {"tool": "adsmix", "version": __version__, "command": args.command,
            "config": resolved_config(args)}


@contextmanager
def _mapper(jobs: int, n_items: int):
    if jobs <= 1 or n_items < 2 * jobs:
        yield map
        return
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, n_items // (jobs * 4))
        yield lambda fn, items: pool.map(fn, items, chunksize=chunk)


def read_predictions(path: str) -> dict[str, str]:
    preds: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), str) \
                    or not isinstance(obj.get("generated"), str):
                raise MalformedLine(line_no, "prediction needs string 'id' and 'generated'")
            preds[obj["id"]] = obj["generated"]
    return preds


def write_predictions(rows: Sequence[tuple[str, str]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for id_, generated in rows:
            fh.write(json.dumps({"id": id_, "generated": generated}, ensure_ascii=False) + "\n")


def _infer_split(dataset_path: str, default: str = "test") -> str:
    with open(dataset_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                prefix = str(json.loads(line).get("id", "")).split("-", 1)[0]
                return prefix if prefix in SPLITS else default
    return default


def cmd_synth(args) -> int:
    corpus = load_corpus(args.corpus, split_name=args.split)
    seeds = args.seeds or [args.seed if args.seed is not None else 0]
    selection = "min_similarity" if args.selection == "minsim" else "random"
    provider = None
    if selection == "min_similarity" and (args.embed_url or os.environ.get(EMBED_ENV)):
        provider = RemoteEmbedder(args.embed_url)
    multi = len(seeds) > 1
    base = resolved_config(args)

    def run_one(seed: int) -> dict:
        datasets, dropped = [], 0
        for k in args.k:
            part = partition(corpus, k, selection, seed, provider=provider,
                             aggregation=args.aggregation)
            dropped += len(part.dropped_ids)
            if args.partition_out:
                ppath = seed_path(args.partition_out, seed, multi)
                if len(args.k) > 1:
                    ppath = _with_tag(ppath, f"k{k}")
                with open(ppath, "w", encoding="utf-8") as fh:
                    fh.write(part.dumps() + "\n")
            datasets.append(synthesize_from_partition(corpus, part, args.ordering, seed))
        ds = datasets[0] if len(datasets) == 1 else merge_variable(datasets, seed)
        out = seed_path(args.out, seed, multi)
        write_dataset(ds, out)
        cfg = {**base, "seed": seed, "seeds": None, "out": out}
        write_meta(out, "synth", cfg, seed)
        stats = dataset_stats(ds)
        log.info("seed %d: %d samples -> %s", seed, len(ds), out)
        return {"samples": len(ds), "dropped": dropped, "out": out,
                "content_tokens_mean": stats["content_tokens"]["mean"],
                "label_tokens_mean": stats["label_tokens"]["mean"]}

    report = run_seed_sweep(seeds, run_one)
    sys.stderr.write(json.dumps({**_header(args), **report}, sort_keys=True) + "\n")
    return EXIT_OK


def _check_k(dataset: AdsDataset, k: int | None) -> None:
    if k is None:
        return
    for s in dataset.samples:
        if s.k != k:
            raise DataError(f"sample {s.id!r} has k={s.k}, expected {k}")


def _scorer(args):
    return make_scorer(args.scorer, endpoint=args.embed_url)


def cmd_eval(args) -> int:
    dataset = read_dataset(args.dataset, _infer_split(args.dataset))
    _check_k(dataset, args.k)
    scorer = _scorer(args)
    cache: dict[str, dict] = {}

    def preds_for(seed: int) -> dict[str, str]:
        path = seed_path(args.preds, seed, False)
        if path not in cache:
            cache[path] = read_predictions(path)
        return cache[path]

    with _mapper(args.jobs, len(dataset)) as map_fn:
        report = evaluate_dataset(dataset, preds_for, seeds=args.seeds,
                                  normalize_method=args.normalize, mode=args.pairing,
                                  scorer=scorer, map_fn=map_fn)
    _emit({**_header(args), **report.to_json(include_samples=args.per_sample)}, args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    dataset = read_dataset(args.dataset, _infer_split(args.dataset))
    scorer = _scorer(args)
    samples: dict[str, list] = {}

    def run_one(seed: int) -> dict:
        path = seed_path(args.preds, seed, False)
        with _mapper(args.jobs, len(dataset)) as map_fn:
            rep = cluster_report(dataset, read_predictions(path), scorer, map_fn=map_fn)
        if args.per_sample:
            samples[str(seed)] = rep.per_sample
        return {"clusters_mean": rep.count_mean, "clusters_std": rep.count_std,
                "f1_mean": rep.f1_mean, "f1_std": rep.f1_std}

    report = run_seed_sweep(args.seeds, run_one)
    if args.per_sample:
        report["per_sample"] = samples
    _emit({**_header(args), **report}, args.out)
    return EXIT_OK


def _baseline_job(job) -> tuple[str, str]:
    sample_id, content, k, config, embed_url, use_remote = job
    embedder = RemoteEmbedder(embed_url) if use_remote else None
    return sample_id, " [SEP] ".join(run_two_step(content, k, config, embedder))


def cmd_baseline(args) -> int:
    dataset = read_dataset(args.dataset, _infer_split(args.dataset))
    seeds = args.seeds or [args.seed if args.seed is not None else 0]
    summarizer = args.summarizer
    if summarizer.startswith("lead") and summarizer != "remote":
        summarizer = "lead_" + summarizer[4:].lstrip("_")
    multi = len(seeds) > 1
    base = resolved_config(args)

    def run_one(seed: int) -> dict:
        config = TwoStepConfig(clusterer=args.clusterer,
                               k_target=AUTO if args.k == AUTO else None,
                               reduction=args.reduction, summarizer=summarizer, seed=seed,
                               summarizer_endpoint=args.summ_url)
        jobs = [(s.id, s.content, args.k if isinstance(args.k, int) else s.k, config,
                 args.embed_url, args.embedder == "remote") for s in dataset.samples]
        with _mapper(args.jobs, len(jobs)) as map_fn:
            rows = list(map_fn(_baseline_job, jobs))
        out = seed_path(args.out, seed, multi)
        write_predictions(rows, out)
        write_meta(out, "baseline", {**base, "seed": seed, "seeds": None, "out": out}, seed)
        counts = [len([p for p in g.split(" [SEP] ") if p]) if g else 0 for _, g in rows]
        return {"samples": len(rows), "summaries_mean": mean_std(counts)[0] if counts else 0.0,
                "out": out}

    report = run_seed_sweep(seeds, run_one)
    sys.stderr.write(json.dumps({**_header(args), **report}, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_rouge(args) -> int:
    cand = Path(args.cand).read_text(encoding="utf-8")
    ref = Path(args.ref).read_text(encoding="utf-8")
    scores = rouge_suite(cand, ref)
    _emit({**_header(args), "scores": scores.as_dict(scale=100.0),
           "rouge_sum": scores.rouge_sum()}, args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.corpus:
        stats = corpus_stats(load_corpus(args.corpus, split_name=args.split or "train"))
    else:
        datasets = [read_dataset(p, args.split or _infer_split(p)) for p in args.dataset]
        stats = dataset_stats(datasets)
    _emit({**_header(args), "stats": stats}, args.out)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "baseline": cmd_baseline,
    "rouge": cmd_rouge,
    "stats": cmd_stats,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        # --help / --version exit 0 through argparse.
        return int(exc.code or 0)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"adsmix: cannot read config: {exc}\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except ServiceError as exc:
        sys.stderr.write(f"adsmix: service error: {exc}\n")
        return EXIT_SERVICE
    except (DataError, OSError) as exc:
        sys.stderr.write(f"adsmix: data error: {exc}\n")
        return EXIT_DATA
    except ValueError as exc:
        sys.stderr.write(f"adsmix: data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
