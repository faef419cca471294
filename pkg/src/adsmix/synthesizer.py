"""Build ADS samples: mixed-sentence content plus ``[SEP]``-joined label."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Article, Corpus, SPLITS, length_stats, split_sentences
from .errors import EmptyArticle, EmptyDataset, IdCollision, MalformedLine
from .rng import Rng, derive_seed
from .sampler import Partition, partition
from .similarity import EmbeddingProvider

SEP = "[SEP]"
LABEL_JOINER = f" {SEP} "
ORDERINGS = ("no_shuffle", "in_shuffle", "cross_shuffle")
ORDERING_ALIASES = {"none": "no_shuffle", "in": "in_shuffle", "cross": "cross_shuffle"}
SELECTION_ALIASES = {"minsim": "min_similarity"}

SAMPLE_KEYS = ("id", "content", "label", "k", "source_ids", "summary_order", "ordering")


@dataclass
class AdsSample:
    id: str
    content: str
    label: str
    k: int
    source_ids: list[str]
    summary_order: list[int]
    ordering: str
    # (source id, sentence index within that article), one per content sentence.
    sentence_provenance: list[tuple[str, int]] = field(default_factory=list)
    # Character [start, end) of each content sentence, parallel to provenance.
    sentence_spans: list[tuple[int, int]] = field(default_factory=list)

    def sentences(self) -> list[str]:
        return [self.content[s:e] for s, e in self.sentence_spans]

    def references(self) -> list[str]:
        return [p.strip() for p in self.label.split(SEP)]

    def source_summaries(self) -> dict[str, str]:
        """Label pieces mapped back to the article they summarize."""
        pieces = self.references()
        return {self.source_ids[src]: pieces[pos] for pos, src in enumerate(self.summary_order)}

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "content": self.content,
            "label": self.label,
            "k": self.k,
            "source_ids": list(self.source_ids),
            "summary_order": list(self.summary_order),
            "ordering": self.ordering,
            "provenance": [[sid, idx] for sid, idx in self.sentence_provenance],
            "spans": [[s, e] for s, e in self.sentence_spans],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AdsSample":
        return cls(
            id=obj["id"],
            content=obj["content"],
            label=obj["label"],
            k=int(obj["k"]),
            source_ids=list(obj["source_ids"]),
            summary_order=[int(x) for x in obj["summary_order"]],
            ordering=obj["ordering"],
            sentence_provenance=[(str(s), int(i)) for s, i in obj.get("provenance", [])],
            sentence_spans=[(int(s), int(e)) for s, e in obj.get("spans", [])],
        )


@dataclass
class AdsDataset:
    samples: list[AdsSample]
    split_name: str = "train"

    @property
    def k_values(self) -> set[int]:
        return {s.k for s in self.samples}

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def _article_sentences(article: Article) -> list[str]:
    sents = split_sentences(article.text)
    if not sents:
        raise EmptyArticle(article.id)
    return sents


def order_sentences(group_articles: Sequence[Article], strategy: str, seed: int):
    """Lay out the group's sentences as one content string.

    Returns ``(content, provenance, spans)``; sentences are joined by single
    spaces with no article boundary marker.
    """
    strategy = ORDERING_ALIASES.get(strategy, strategy)
    if strategy not in ORDERINGS:
        raise ValueError(f"unknown ordering {strategy!r}")
    rng = Rng(seed)
    blocks = [
        [(art.id, i, s) for i, s in enumerate(_article_sentences(art))]
        for art in group_articles
    ]
    if strategy == "in_shuffle":
        for block in blocks:
            rng.shuffle(block)
    units = [u for block in blocks for u in block]
    if strategy == "cross_shuffle":
        rng.shuffle(units)

    provenance: list[tuple[str, int]] = []
    spans: list[tuple[int, int]] = []
    pos = 0
    for sid, idx, text in units:
        provenance.append((sid, idx))
        spans.append((pos, pos + len(text)))
        pos += len(text) + 1
    content = " ".join(text for _, _, text in units)
    return content, provenance, spans


def concat_summaries(group_articles: Sequence[Article], seed: int) -> tuple[str, list[int]]:
    """Join the group's summaries in a seeded random order.

    ``summary_order[p]`` is the group position of the summary at label slot ``p``.
    """
    order = Rng(seed).permutation(len(group_articles))
    label = LABEL_JOINER.join(group_articles[i].summary.strip() for i in order)
    return label, order


def build_sample(sample_id: str, group_articles: Sequence[Article], ordering: str,
                 seed: int) -> AdsSample:
    ordering = ORDERING_ALIASES.get(ordering, ordering)
    content, provenance, spans = order_sentences(
        group_articles, ordering, derive_seed(seed, "content"))
    label, order = concat_summaries(group_articles, derive_seed(seed, "label"))
    return AdsSample(
        id=sample_id,
        content=content,
        label=label,
        k=len(group_articles),
        source_ids=[a.id for a in group_articles],
        summary_order=order,
        ordering=ordering,
        sentence_provenance=provenance,
        sentence_spans=spans,
    )


def sample_seed(seed: int, group_index: int) -> int:
    return derive_seed(seed, group_index)


def synthesize_from_partition(corpus: Corpus, part: Partition, ordering: str,
                              seed: int) -> AdsDataset:
    samples = []
    for g, positions in enumerate(part.positions):
        arts = [corpus[p] for p in positions]
        sid = f"{corpus.split_name}-k{part.k}-{g}"
        samples.append(build_sample(sid, arts, ordering, sample_seed(seed, g)))
    return AdsDataset(samples, corpus.split_name)


def synthesize_dataset(corpus: Corpus, k: int, selection: str = "random",
                       ordering: str = "cross_shuffle", seed: int = 0,
                       provider: EmbeddingProvider | None = None,
                       aggregation: str = "min") -> AdsDataset:
    """One sample per partition group; each sample gets its own derived seed."""
    selection = SELECTION_ALIASES.get(selection, selection)
    part = partition(corpus, k, selection, seed, provider=provider, aggregation=aggregation)
    return synthesize_from_partition(corpus, part, ordering, seed)


def merge_variable(datasets: Sequence[AdsDataset], seed: int = 0,
                   reid: bool = False) -> AdsDataset:
    """Union of datasets in one seeded random order (the variable-K mix)."""
    if not datasets:
        raise EmptyDataset("nothing to merge")
    samples: list[AdsSample] = []
    seen: set[str] = set()
    for ds in datasets:
        for s in ds.samples:
            if s.id in seen and not reid:
                raise IdCollision(s.id)
            seen.add(s.id)
            samples.append(s)
    Rng(seed).shuffle(samples)
    split = datasets[0].split_name
    if reid:
        samples = [_renamed(s, f"{split}-var-{i}") for i, s in enumerate(samples)]
    return AdsDataset(samples, split)


def _renamed(sample: AdsSample, new_id: str) -> AdsSample:
    return AdsSample(**{**sample.__dict__, "id": new_id})


def _label_tokens(label: str) -> int:
    return sum(1 for tok in label.split() if tok != SEP)


def dataset_stats(datasets: AdsDataset | Iterable[AdsDataset]) -> dict:
    """Mean/std lengths (whitespace tokens) and per-split counts.

    Label lengths exclude the ``[SEP]`` separators.
    """
    if isinstance(datasets, AdsDataset):
        datasets = [datasets]
    datasets = list(datasets)
    samples = [s for ds in datasets for s in ds.samples]
    if not samples:
        raise EmptyDataset("dataset has no samples")
    content = length_stats([len(s.content.split()) for s in samples])
    label = length_stats([_label_tokens(s.label) for s in samples])
    counts: dict[str, int] = {}
    for ds in datasets:
        counts[ds.split_name] = counts.get(ds.split_name, 0) + len(ds)
    return {
        "k_values": sorted({s.k for s in samples}),
        "content_tokens": {"mean": content.mean, "std": content.std},
        "label_tokens": {"mean": label.mean, "std": label.std},
        "counts": counts,
        "total": len(samples),
    }


def write_dataset(dataset: AdsDataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in dataset.samples:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def read_dataset(path: str | Path, split_name: str = "test") -> AdsDataset:
    if split_name not in SPLITS:
        raise ValueError(f"unknown split {split_name!r}")
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                missing = [key for key in SAMPLE_KEYS if key not in obj]
                if missing:
                    raise MalformedLine(line_no, f"missing {', '.join(missing)}")
                samples.append(AdsSample.from_json(obj))
            except MalformedLine:
                raise
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
            except (TypeError, ValueError, AttributeError) as exc:
                raise MalformedLine(line_no, str(exc)) from None
    return AdsDataset(samples, split_name)


def count_separators(label: str) -> int:
    return len(re.findall(re.escape(SEP), label))
