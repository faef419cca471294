"""Corpus loading, sentence segmentation and length statistics."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .errors import DuplicateId, EmptyCorpus, MalformedLine

SPLITS = ("train", "validation", "test")
CORPUS_KEYS = ("id", "article", "summary")

# Lowercased forms; matched against the whitespace token that carries the terminator.
ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.",
        "u.s.", "u.k.", "e.g.", "i.e.", "etc.", "vs.", "inc.", "ltd.",
    }
)

# A terminator run, optional closing quotes/brackets, then the whitespace that ends the sentence.
_BOUNDARY = re.compile(r"[.!?]+[\"'”’)\]]*(?= )")


@dataclass(frozen=True)
class Article:
    id: str
    text: str
    summary: str


@dataclass(frozen=True)
class Sentence:
    text: str
    source_article: str
    index_in_article: int


@dataclass
class Corpus:
    articles: list[Article]
    split_name: str = "train"
    _index: dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.split_name not in SPLITS:
            raise ValueError(f"unknown split {self.split_name!r}")
        for pos, art in enumerate(self.articles):
            if art.id in self._index:
                raise DuplicateId(art.id)
            self._index[art.id] = pos

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def __getitem__(self, pos: int) -> Article:
        return self.articles[pos]

    def by_id(self, id_: str) -> Article:
        return self.articles[self._index[id_]]

    def ids(self) -> list[str]:
        return [a.id for a in self.articles]


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def load_corpus(path: str | Path, format: str = "jsonl", split_name: str = "train") -> Corpus:
    """Read a ``{"id", "article", "summary"}`` JSONL file, preserving line order.

    Blank lines are skipped but still counted for ``MalformedLine`` numbering
    (1-based, physical lines).
    """
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format {format!r}")
    articles: list[Article] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise MalformedLine(line_no, "not a JSON object")
            for key in CORPUS_KEYS:
                if not isinstance(obj.get(key), str):
                    raise MalformedLine(line_no, f"missing string field {key!r}")
            id_, text, summary = obj["id"], obj["article"], obj["summary"]
            if not id_ or not text.strip() or not summary.strip():
                raise MalformedLine(line_no, "empty id, article or summary")
            if id_ in seen:
                raise DuplicateId(id_)
            seen.add(id_)
            articles.append(Article(id_, text, summary))
    return Corpus(articles, split_name)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for art in corpus:
            row = {"id": art.id, "article": art.text, "summary": art.summary}
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def split_sentences(text: str) -> list[str]:
    """Sentence strings of ``text`` after whitespace normalization."""
    norm = normalize_whitespace(text)
    if not norm:
        return []
    out: list[str] = []
    start = 0
    for m in _BOUNDARY.finditer(norm):
        end = m.end()
        word_start = max(norm.rfind(" ", start, end) + 1, start)
        word = norm[word_start:end].lower()
        if word.rstrip("\"'”’)]") in ABBREVIATIONS:
            continue
        out.append(norm[start:end])
        start = end + 1
    if start < len(norm):
        out.append(norm[start:])
    return out


def segment_sentences(text: str, source_article: str = "") -> list[Sentence]:
    return [
        Sentence(s, source_article, i) for i, s in enumerate(split_sentences(text))
    ]


@dataclass(frozen=True)
class LengthStats:
    count: int
    mean: float
    std: float

    def as_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "std": self.std}


def length_stats(lengths: Sequence[int]) -> LengthStats:
    """Mean and population standard deviation."""
    n = len(lengths)
    mean = math.fsum(lengths) / n
    var = math.fsum((x - mean) ** 2 for x in lengths) / n
    return LengthStats(n, mean, math.sqrt(var))


def whitespace_tokens(text: str) -> int:
    return len(text.split())


def corpus_stats(corpus: Corpus, tokenizer=whitespace_tokens) -> dict:
    if len(corpus) == 0:
        raise EmptyCorpus("corpus has no articles")
    article = length_stats([tokenizer(a.text) for a in corpus])
    summary = length_stats([tokenizer(a.summary) for a in corpus])
    return {
        "split": corpus.split_name,
        "count": len(corpus),
        "article_tokens": {"mean": article.mean, "std": article.std},
        "summary_tokens": {"mean": summary.mean, "std": summary.std},
    }
