"""Corpus ingestion: tokenization, documents, and vocabulary statistics.

Documents are exchanged as line-delimited JSON records
(``{"id": ..., "title": ..., "text": ...}``); the vocabulary file is
line-delimited as well, with a header line carrying corpus totals.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

from sklearn.base import BaseEstimator

from .errors import DataError, DuplicateDocumentError

_TOKEN_RE = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on maximal runs of non-alphanumeric characters."""
    return [t for t in _TOKEN_RE.split(text.lower()) if t]


@dataclass(frozen=True)
class Document:
    doc_id: str
    words: tuple[str, ...]

    def __post_init__(self):
        if not self.doc_id:
            raise DataError("document id must be non-empty")
        if any(not w for w in self.words):
            raise DataError(f"document {self.doc_id!r} contains empty words")

    @property
    def length(self) -> int:
        return len(self.words)

    @classmethod
    def from_text(cls, doc_id: str, text: str, title: str | None = None) -> "Document":
        if title:
            text = title + " " + text
        return cls(doc_id, tuple(tokenize(text)))


@dataclass(frozen=True)
class Vocabulary:
    """Term ids with corpus-level frequency statistics.

    Ids are dense integers assigned by descending collection frequency,
    ties broken lexicographically, so two builds over the same stream
    agree exactly.
    """

    terms: dict[str, int]
    collection_freq: tuple[int, ...]
    doc_freq: tuple[int, ...]
    total_tokens: int
    num_documents: int
    id_to_term: tuple[str, ...] = field(repr=False, default=())

    def __post_init__(self):
        if not self.id_to_term:
            inverse = [""] * len(self.terms)
            for term, tid in self.terms.items():
                inverse[tid] = term
            object.__setattr__(self, "id_to_term", tuple(inverse))

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.terms

    def term_id(self, term: str) -> int | None:
        return self.terms.get(term)

    def term(self, term_id: int) -> str:
        return self.id_to_term[term_id]

    def doc_term_ids(self, doc: Document) -> list[int]:
        """In-vocabulary term id per word position (OOV words skipped)."""
        get = self.terms.get
        return [tid for tid in (get(w) for w in doc.words) if tid is not None]


class VocabularyBuilder(BaseEstimator):
    """Single-pass vocabulary builder over a document stream.

    Memory is O(distinct words); duplicate document ids are a hard error.
    After ``fit`` the result is available as ``vocabulary_``.
    """

    def __init__(self, min_count: int = 1):
        self.min_count = min_count

    def fit(self, documents: Iterable[Document], y=None) -> "VocabularyBuilder":
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        cf: Counter[str] = Counter()
        df: Counter[str] = Counter()
        seen_ids: set[str] = set()
        n_docs = 0
        for doc in documents:
            if doc.doc_id in seen_ids:
                raise DuplicateDocumentError(doc.doc_id)
            seen_ids.add(doc.doc_id)
            n_docs += 1
            counts = Counter(doc.words)
            cf.update(counts)
            df.update(counts.keys())
        if n_docs == 0:
            raise DataError("cannot build a vocabulary from an empty corpus")
        self.vocabulary_ = _assemble(cf, df, n_docs, self.min_count)
        return self

    def fit_from_counts(
        self, cf: Counter, df: Counter, num_documents: int
    ) -> "VocabularyBuilder":
        """Build from pre-merged partial counts (sharded counting)."""
        if num_documents == 0:
            raise DataError("cannot build a vocabulary from an empty corpus")
        self.vocabulary_ = _assemble(cf, df, num_documents, self.min_count)
        return self


def _assemble(cf: Counter, df: Counter, n_docs: int, min_count: int) -> Vocabulary:
    kept = sorted(
        (t for t, c in cf.items() if c >= min_count),
        key=lambda t: (-cf[t], t),
    )
    terms = {t: i for i, t in enumerate(kept)}
    collection = tuple(cf[t] for t in kept)
    return Vocabulary(
        terms=terms,
        collection_freq=collection,
        doc_freq=tuple(df[t] for t in kept),
        total_tokens=sum(collection),
        num_documents=n_docs,
    )


def count_partial(documents: Iterable[Document]) -> tuple[Counter, Counter, int]:
    """Per-shard counts; merge with ``Counter.update`` (associative)."""
    cf: Counter[str] = Counter()
    df: Counter[str] = Counter()
    n = 0
    for doc in documents:
        n += 1
        counts = Counter(doc.words)
        cf.update(counts)
        df.update(counts.keys())
    return cf, df, n


# --- line-delimited IO ---------------------------------------------------


def read_documents(fh: TextIO) -> Iterator[Document]:
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"corpus line {lineno}: invalid JSON ({e})") from e
        if "id" not in rec or "text" not in rec:
            raise DataError(f"corpus line {lineno}: missing 'id' or 'text'")
        yield Document.from_text(str(rec["id"]), rec["text"], rec.get("title"))


def load_documents(path) -> list[Document]:
    with open(path, encoding="utf-8") as fh:
        return list(read_documents(fh))


def write_vocabulary(vocab: Vocabulary, fh: TextIO) -> None:
    header = {
        "total_tokens": vocab.total_tokens,
        "num_documents": vocab.num_documents,
    }
    fh.write(json.dumps(header) + "\n")
    for term, tid in sorted(vocab.terms.items(), key=lambda kv: kv[1]):
        rec = {
            "term": term,
            "id": tid,
            "cf": vocab.collection_freq[tid],
            "df": vocab.doc_freq[tid],
        }
        fh.write(json.dumps(rec) + "\n")


def read_vocabulary(fh: TextIO) -> Vocabulary:
    header_line = fh.readline()
    if not header_line.strip():
        raise DataError("vocabulary file is empty")
    header = json.loads(header_line)
    if "total_tokens" not in header:
        raise DataError("vocabulary file is missing its header line")
    terms: dict[str, int] = {}
    cf: dict[int, int] = {}
    df: dict[int, int] = {}
    for line in fh:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        tid = int(rec["id"])
        terms[rec["term"]] = tid
        cf[tid] = int(rec["cf"])
        df[tid] = int(rec["df"])
    ids = range(len(terms))
    return Vocabulary(
        terms=terms,
        collection_freq=tuple(cf[i] for i in ids),
        doc_freq=tuple(df[i] for i in ids),
        total_tokens=int(header["total_tokens"]),
        num_documents=int(header["num_documents"]),
    )


def load_vocabulary(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        return read_vocabulary(fh)
