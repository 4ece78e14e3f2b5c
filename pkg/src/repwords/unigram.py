"""Dirichlet-smoothed multinomial unigram document language model.

Provides the classical sampling distribution (baseline mode) and the
query-likelihood scorer used by the ``unigram-ql`` scoring option.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Document, Vocabulary
from .distributions import TermDistribution
from .errors import UnknownTermError, UnsampleableDocumentError

DEFAULT_MU = 2000.0


class UnigramLanguageModel(BaseEstimator):
    """P(w|d) = (c(w,d) + mu * P(w|C)) / (|d| + mu).

    |d| counts only in-vocabulary tokens, matching the corpus totals the
    background model is built from. All likelihoods are kept in log
    space; products of many term probabilities underflow otherwise.
    """

    def __init__(self, mu: float = DEFAULT_MU):
        self.mu = mu

    def fit(self, vocabulary: Vocabulary, y=None) -> "UnigramLanguageModel":
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        self.vocabulary_ = vocabulary
        self.background_ = np.asarray(
            vocabulary.collection_freq, dtype=np.float64
        ) / vocabulary.total_tokens
        return self

    def _doc_counts(self, doc: Document) -> tuple[Counter, int]:
        tids = self.vocabulary_.doc_term_ids(doc)
        return Counter(tids), len(tids)

    def term_prob(self, doc: Document, term_id: int) -> float:
        if term_id < 0 or term_id >= len(self.vocabulary_):
            raise UnknownTermError(term_id)
        counts, length = self._doc_counts(doc)
        return (counts.get(term_id, 0) + self.mu * self.background_[term_id]) / (
            length + self.mu
        )

    def set_log_likelihood(self, doc: Document, term_ids: Sequence[int]) -> float:
        """Sum of log term probabilities; the empty set scores 0."""
        counts, length = self._doc_counts(doc)
        denom = length + self.mu
        total = 0.0
        for tid in term_ids:
            if tid < 0 or tid >= len(self.vocabulary_):
                raise UnknownTermError(tid)
            p = (counts.get(tid, 0) + self.mu * self.background_[tid]) / denom
            total += math.log(p) if p > 0 else -math.inf
        return total

    def lm_distribution(self, doc: Document) -> TermDistribution:
        """Smoothed term probabilities renormalized over the document's
        distinct in-vocabulary terms (sampling never leaves the document)."""
        counts, length = self._doc_counts(doc)
        if not counts:
            raise UnsampleableDocumentError(doc.doc_id)
        terms = np.array(sorted(counts), dtype=np.int64)
        mass = np.array(
            [counts[t] + self.mu * self.background_[t] for t in terms.tolist()],
            dtype=np.float64,
        ) / (length + self.mu)
        return TermDistribution(terms, mass / mass.sum(), kind="unigram")

    def transform(self, documents: Iterable[Document]) -> list[TermDistribution]:
        return [self.lm_distribution(d) for d in documents]
