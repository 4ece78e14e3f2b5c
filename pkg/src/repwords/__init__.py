"""Contrastive attention-based sampling of representative word-set pairs."""

from .corpus import Document, Vocabulary, VocabularyBuilder, tokenize
from .distributions import (
    AttentionRecord,
    AttentionTermWeighting,
    ContrastiveWeighting,
    RandomDistributionAggregator,
    TermDistribution,
    contrastive_distribution,
)
from .errors import DataError, PipelineError, UnsampleableDocumentError
from .sampler import RopInstance, RopPairSampler, sample_length, sample_word_set
from .unigram import UnigramLanguageModel

__all__ = [
    "AttentionRecord",
    "AttentionTermWeighting",
    "ContrastiveWeighting",
    "DataError",
    "Document",
    "PipelineError",
    "RandomDistributionAggregator",
    "RopInstance",
    "RopPairSampler",
    "TermDistribution",
    "UnigramLanguageModel",
    "UnsampleableDocumentError",
    "Vocabulary",
    "VocabularyBuilder",
    "contrastive_distribution",
    "sample_length",
    "sample_word_set",
    "tokenize",
]

__version__ = "0.1.0"
