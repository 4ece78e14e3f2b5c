import json

import numpy as np
import pytest

from repwords.corpus import Document, VocabularyBuilder
from repwords.distributions import AttentionRecord


def make_attention(doc, rng):
    """Synthetic word-level weights; a slice of a Dirichlet row so the
    total stays strictly below 1 (the rest plays the special tokens)."""
    full = rng.dirichlet(np.ones(doc.length + 2))
    return AttentionRecord(doc.doc_id, full[: doc.length])


@pytest.fixture
def toy_docs():
    texts = [
        "pulmonary fibrosis is a lung disease",
        "the lung needs air and the air needs a lung",
        "fibrosis of tissue is scarring of tissue",
        "air quality in the city is poor",
        "scarring of the lung tissue reduces air flow",
    ]
    return [Document.from_text(f"d{i}", t) for i, t in enumerate(texts)]


@pytest.fixture
def toy_vocab(toy_docs):
    return VocabularyBuilder(min_count=1).fit(toy_docs).vocabulary_


@pytest.fixture
def toy_attention(toy_docs):
    rng = np.random.default_rng(7)
    return {d.doc_id: make_attention(d, rng) for d in toy_docs}


def write_corpus(path, docs):
    """docs: iterable of (id, text) or (id, title, text)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in docs:
            if len(rec) == 3:
                row = {"id": rec[0], "title": rec[1], "text": rec[2]}
            else:
                row = {"id": rec[0], "text": rec[1]}
            fh.write(json.dumps(row) + "\n")


def write_attention_file(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps({"id": rec.doc_id, "weights": rec.weights.tolist()}) + "\n"
            )
