"""Attention-derived term distributions.

Three distributions are computed per corpus: the per-document
distribution (softmax over saturated, position-aggregated attention
weights), the random distribution (corpus-wide average of the document
distributions), and the contrastive distribution (softmax of the
per-term cross-entropy against the random background).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Document, Vocabulary
from .errors import (
    DataError,
    MisalignedAttentionError,
    UnsampleableDocumentError,
)

RANDOM_DIST_ID = "__random__"

_SUM_TOL = 1e-6


@dataclass(frozen=True)
class AttentionRecord:
    """Word-level attention weights aligned to one document's words."""

    doc_id: str
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0):
            raise DataError(f"attention record {self.doc_id!r} has negative weights")
        if w.sum() > 1.0 + 1e-4:
            raise DataError(
                f"attention record {self.doc_id!r} sums to {w.sum():.6f} > 1"
            )

    def check_alignment(self, doc: Document) -> None:
        if len(self.weights) != doc.length:
            raise MisalignedAttentionError(doc.doc_id, doc.length, len(self.weights))


@dataclass(frozen=True)
class TermDistribution:
    """Sparse probability mass over term ids, sorted by term id."""

    terms: np.ndarray
    probs: np.ndarray
    kind: str

    def __post_init__(self):
        terms = np.asarray(self.terms, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "probs", probs)
        if len(terms) != len(probs):
            raise DataError("terms and probs must have equal length")
        if len(terms) == 0:
            raise DataError("a term distribution cannot be empty")
        if np.any(probs <= 0):
            raise DataError(f"{self.kind} distribution has non-positive mass")
        total = probs.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise DataError(
                f"{self.kind} distribution sums to {total!r}, expected 1"
            )

    def __len__(self) -> int:
        return len(self.terms)

    def prob_of(self, term_id: int) -> float:
        i = np.searchsorted(self.terms, term_id)
        if i < len(self.terms) and self.terms[i] == term_id:
            return float(self.probs[i])
        return 0.0

    def lookup(self, term_ids: np.ndarray) -> np.ndarray:
        """Probabilities for term ids known to be on the support."""
        idx = np.searchsorted(self.terms, term_ids)
        if np.any(idx >= len(self.terms)) or np.any(self.terms[idx] != term_ids):
            raise DataError("term id outside distribution support")
        return self.probs[idx]

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.terms.tolist(), self.probs.tolist()))

    def top_k(self, k: int) -> list[tuple[int, float]]:
        order = np.argsort(-self.probs, kind="stable")[:k]
        return [(int(self.terms[i]), float(self.probs[i])) for i in order]


def softmax(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    e = np.exp(values - values.max())
    return e / e.sum()


def saturate(raw: np.ndarray, b: float) -> np.ndarray:
    """BM25-style saturation x/(b+x); bounds any single term's weight."""
    raw = np.asarray(raw, dtype=np.float64)
    return raw / (b + raw)


def aggregate_attention(
    doc: Document, att: AttentionRecord, vocab: Vocabulary
) -> tuple[np.ndarray, np.ndarray]:
    """Sum word-level weights per distinct in-vocabulary term.

    Returns (sorted term ids, raw aggregated weights).
    """
    att.check_alignment(doc)
    sums: dict[int, float] = {}
    get = vocab.terms.get
    for word, weight in zip(doc.words, att.weights):
        tid = get(word)
        if tid is None:
            continue
        sums[tid] = sums.get(tid, 0.0) + float(weight)
    if not sums:
        raise UnsampleableDocumentError(doc.doc_id)
    terms = np.array(sorted(sums), dtype=np.int64)
    raw = np.array([sums[t] for t in terms.tolist()], dtype=np.float64)
    return terms, raw


class AttentionTermWeighting(BaseEstimator):
    """Document term distributions from word-level attention records.

    ``saturation=False`` reproduces the ablation where the softmax is
    taken over the raw aggregated weights.
    """

    def __init__(self, b: float = 0.01, saturation: bool = True):
        self.b = b
        self.saturation = saturation

    def fit(self, vocabulary: Vocabulary, y=None) -> "AttentionTermWeighting":
        if self.b <= 0:
            raise ValueError("saturation parameter b must be > 0")
        self.vocabulary_ = vocabulary
        return self

    def document_distribution(
        self, doc: Document, att: AttentionRecord
    ) -> TermDistribution:
        terms, raw = aggregate_attention(doc, att, self.vocabulary_)
        weights = saturate(raw, self.b) if self.saturation else raw
        return TermDistribution(terms, softmax(weights), kind="document")

    def transform(
        self, pairs: Iterable[tuple[Document, AttentionRecord]]
    ) -> list[TermDistribution]:
        return [self.document_distribution(d, a) for d, a in pairs]


class RandomDistributionAggregator(BaseEstimator):
    """Streaming average of document term distributions.

    ``add`` is associative and commutative over shards; ``merge`` folds a
    worker-local aggregator into this one.
    """

    def __init__(self):
        self._sums: dict[int, float] = {}
        self._count = 0

    def add(self, dist: TermDistribution) -> None:
        sums = self._sums
        for tid, p in zip(dist.terms.tolist(), dist.probs.tolist()):
            sums[tid] = sums.get(tid, 0.0) + p
        self._count += 1

    def merge(self, other: "RandomDistributionAggregator") -> None:
        for tid, s in other._sums.items():
            self._sums[tid] = self._sums.get(tid, 0.0) + s
        self._count += other._count

    def fit(self, dists: Iterable[TermDistribution], y=None):
        for dist in dists:
            self.add(dist)
        self.random_distribution_ = self.result()
        return self

    @property
    def count(self) -> int:
        return self._count

    def result(self) -> TermDistribution:
        if self._count == 0:
            raise DataError("no document distributions to average")
        terms = np.array(sorted(self._sums), dtype=np.int64)
        probs = np.array(
            [self._sums[t] / self._count for t in terms.tolist()], dtype=np.float64
        )
        return TermDistribution(terms, probs, kind="random")


def contrastive_distribution(
    doc_dist: TermDistribution, random_dist: TermDistribution
) -> TermDistribution:
    """Softmax of -P(w|doc) * log2 P(w|random) over the document support."""
    p_random = random_dist.lookup(doc_dist.terms)
    if np.any(p_random <= 0):
        raise DataError(
            "random distribution has zero mass on the document support"
        )
    gamma = -doc_dist.probs * np.log2(p_random)
    return TermDistribution(doc_dist.terms, softmax(gamma), kind="contrastive")


class ContrastiveWeighting(BaseEstimator):
    """Per-document contrastive distributions against a frozen background."""

    def __init__(self, random_dist: TermDistribution | None = None):
        self.random_dist = random_dist

    def fit(self, dists: Iterable[TermDistribution], y=None) -> "ContrastiveWeighting":
        if self.random_dist is None:
            agg = RandomDistributionAggregator()
            self.random_dist_ = agg.fit(dists).random_distribution_
        else:
            self.random_dist_ = self.random_dist
        return self

    def transform(self, dists: Iterable[TermDistribution]) -> list[TermDistribution]:
        return [contrastive_distribution(d, self.random_dist_) for d in dists]


# --- line-delimited IO ---------------------------------------------------


def write_distribution(doc_id: str, dist: TermDistribution, fh: TextIO) -> None:
    rec = {
        "id": doc_id,
        "kind": dist.kind,
        "probs": [[int(t), float(p)] for t, p in zip(dist.terms, dist.probs)],
    }
    fh.write(json.dumps(rec) + "\n")


def read_distributions(fh: TextIO) -> Iterator[tuple[str, TermDistribution]]:
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"distribution line {lineno}: invalid JSON ({e})") from e
        pairs = rec["probs"]
        terms = np.array([t for t, _ in pairs], dtype=np.int64)
        probs = np.array([p for _, p in pairs], dtype=np.float64)
        yield str(rec["id"]), TermDistribution(terms, probs, kind=rec["kind"])


def load_distributions(path) -> dict[str, TermDistribution]:
    with open(path, encoding="utf-8") as fh:
        return dict(read_distributions(fh))


def read_attention(fh: TextIO) -> Iterator[AttentionRecord]:
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"attention line {lineno}: invalid JSON ({e})") from e
        yield AttentionRecord(str(rec["id"]), np.asarray(rec["weights"], dtype=np.float64))


def load_attention(path) -> dict[str, AttentionRecord]:
    with open(path, encoding="utf-8") as fh:
        return {rec.doc_id: rec for rec in read_attention(fh)}
