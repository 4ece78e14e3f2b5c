"""Sampling of labeled, equal-length word-set pairs per document.

Each document gets its own RNG stream derived from (global seed,
doc id), so the instance file is byte-identical regardless of how the
corpus is sharded across workers.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Document, Vocabulary
from .distributions import TermDistribution
from .errors import DataError
from .unigram import UnigramLanguageModel

MODES = ("bprop", "prop", "document")
SCORERS = ("distribution-product", "unigram-ql")

DEFAULT_LAMBDA = 3.0
DEFAULT_PAIRS_PER_DOC = 5
DEFAULT_MAX_RESAMPLE_ATTEMPTS = 100


@dataclass(frozen=True)
class RopInstance:
    doc_id: str
    set_hi: tuple[str, ...]
    set_lo: tuple[str, ...]
    score_hi: float
    score_lo: float

    def __post_init__(self):
        if len(self.set_hi) != len(self.set_lo) or not self.set_hi:
            raise DataError("word sets must be non-empty and equal-length")
        if not self.score_hi > self.score_lo:
            raise DataError("score_hi must be strictly greater than score_lo")


@dataclass
class DocumentSampleReport:
    doc_id: str
    instances: int
    ties_resampled: int
    budget_exhausted: int
    skipped: bool = False
    reason: str = ""


def rng_for_doc(seed: int, doc_id: str) -> np.random.Generator:
    """Stable per-document stream; independent of worker sharding."""
    digest = hashlib.sha256(doc_id.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *words]))


def sample_length(
    rng: np.random.Generator,
    lam: float,
    max_len: int,
    max_attempts: int = DEFAULT_MAX_RESAMPLE_ATTEMPTS,
) -> int:
    """Poisson draw rejected until it lands in [1, max_len]."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    draw = 0
    for _ in range(max_attempts):
        draw = int(rng.poisson(lam))
        if 1 <= draw <= max_len:
            return draw
    return min(max(draw, 1), max_len)


def sample_word_set(
    rng: np.random.Generator, dist: TermDistribution, length: int
) -> list[int]:
    """Draw ``length`` distinct term ids, each proportional to the
    remaining renormalized mass."""
    support = len(dist)
    if length > support:
        raise DataError(f"cannot draw {length} distinct terms from {support}")
    probs = dist.probs.copy()
    chosen: list[int] = []
    for _ in range(length):
        p = probs / probs.sum()
        idx = int(rng.choice(support, p=p))
        chosen.append(int(dist.terms[idx]))
        probs[idx] = 0.0
    return chosen


class RopPairSampler(BaseEstimator):
    """Per-document sampler emitting labeled word-set pairs.

    ``scorer`` picks how a set is scored: the log mass-product under the
    sampling distribution itself, or the smoothed query likelihood.
    """

    def __init__(
        self,
        lam: float = DEFAULT_LAMBDA,
        pairs_per_doc: int = DEFAULT_PAIRS_PER_DOC,
        mode: str = "bprop",
        scorer: str = "distribution-product",
        seed: int = 0,
        max_resample_attempts: int = DEFAULT_MAX_RESAMPLE_ATTEMPTS,
    ):
        self.lam = lam
        self.pairs_per_doc = pairs_per_doc
        self.mode = mode
        self.scorer = scorer
        self.seed = seed
        self.max_resample_attempts = max_resample_attempts

    def fit(
        self, vocabulary: Vocabulary, lm: UnigramLanguageModel | None = None
    ) -> "RopPairSampler":
        if self.lam <= 0:
            raise ValueError("lam must be > 0")
        if self.pairs_per_doc < 1:
            raise ValueError("pairs_per_doc must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.scorer not in SCORERS:
            raise ValueError(f"scorer must be one of {SCORERS}")
        if self.scorer == "unigram-ql" and lm is None:
            raise ValueError("unigram-ql scoring needs a fitted language model")
        self.vocabulary_ = vocabulary
        self.lm_ = lm
        return self

    def score_set(
        self, doc: Document, dist: TermDistribution, term_ids: list[int]
    ) -> float:
        if self.scorer == "unigram-ql":
            return self.lm_.set_log_likelihood(doc, term_ids)
        return float(sum(math.log(dist.prob_of(t)) for t in term_ids))

    def sample_document(
        self, doc: Document, dist: TermDistribution
    ) -> tuple[list[RopInstance], DocumentSampleReport]:
        report = DocumentSampleReport(doc.doc_id, 0, 0, 0)
        support = len(dist)
        if support < 2:
            report.skipped = True
            report.reason = "fewer than 2 distinct sampleable terms"
            return [], report
        rng = rng_for_doc(self.seed, doc.doc_id)
        instances: list[RopInstance] = []
        for _ in range(self.pairs_per_doc):
            pair = self._sample_pair(doc, dist, rng, report)
            if pair is None:
                report.budget_exhausted += 1
                continue
            instances.append(pair)
        report.instances = len(instances)
        return instances, report

    def _sample_pair(
        self,
        doc: Document,
        dist: TermDistribution,
        rng: np.random.Generator,
        report: DocumentSampleReport,
    ) -> RopInstance | None:
        vocab = self.vocabulary_
        for _ in range(self.max_resample_attempts):
            length = sample_length(rng, self.lam, len(dist), self.max_resample_attempts)
            set_a = sample_word_set(rng, dist, length)
            set_b = sample_word_set(rng, dist, length)
            score_a = self.score_set(doc, dist, set_a)
            score_b = self.score_set(doc, dist, set_b)
            if score_a == score_b:
                report.ties_resampled += 1
                continue
            if score_a < score_b:
                set_a, set_b = set_b, set_a
                score_a, score_b = score_b, score_a
            return RopInstance(
                doc_id=doc.doc_id,
                set_hi=tuple(vocab.term(t) for t in set_a),
                set_lo=tuple(vocab.term(t) for t in set_b),
                score_hi=score_a,
                score_lo=score_b,
            )
        return None

    def transform(
        self, pairs: Iterable[tuple[Document, TermDistribution]]
    ) -> tuple[list[RopInstance], list[DocumentSampleReport]]:
        instances: list[RopInstance] = []
        reports: list[DocumentSampleReport] = []
        for doc, dist in pairs:
            inst, rep = self.sample_document(doc, dist)
            instances.extend(inst)
            reports.append(rep)
        return instances, reports


# --- line-delimited IO ---------------------------------------------------


def write_instance(inst: RopInstance, fh: TextIO) -> None:
    rec = {
        "id": inst.doc_id,
        "rep": list(inst.set_hi),
        "non_rep": list(inst.set_lo),
        "rep_score": inst.score_hi,
        "non_rep_score": inst.score_lo,
    }
    fh.write(json.dumps(rec) + "\n")


def read_instances(fh: TextIO) -> Iterator[RopInstance]:
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"instance line {lineno}: invalid JSON ({e})") from e
        yield RopInstance(
            doc_id=str(rec["id"]),
            set_hi=tuple(rec["rep"]),
            set_lo=tuple(rec["non_rep"]),
            score_hi=float(rec["rep_score"]),
            score_lo=float(rec["non_rep_score"]),
        )


def load_instances(path) -> list[RopInstance]:
    with open(path, encoding="utf-8") as fh:
        return list(read_instances(fh))
