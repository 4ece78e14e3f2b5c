"""Acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Everything here runs on synthetic attention fixtures.
"""

import hashlib
import math
import time

import numpy as np
import pytest
from scipy import stats as sp_stats

from conftest import make_attention, write_attention_file, write_corpus
from repwords.cli import main as cli_main
from repwords.corpus import Document, VocabularyBuilder
from repwords.distributions import (
    AttentionRecord,
    AttentionTermWeighting,
    RandomDistributionAggregator,
    contrastive_distribution,
    saturate,
    softmax,
)
from repwords.sampler import RopPairSampler, rng_for_doc, sample_word_set
from repwords.unigram import UnigramLanguageModel


def ok(n, message):
    print(f"\nACCEPTANCE {n} PASS: {message}")


def build_chain(docs, attention, vocab, b=0.01):
    weighting = AttentionTermWeighting(b=b).fit(vocab)
    doc_dists = {
        d.doc_id: weighting.document_distribution(d, attention[d.doc_id])
        for d in docs
    }
    agg = RandomDistributionAggregator()
    for dist in doc_dists.values():
        agg.add(dist)
    random_dist = agg.result()
    contrastive = {
        k: contrastive_distribution(v, random_dist) for k, v in doc_dists.items()
    }
    return doc_dists, random_dist, contrastive


def test_criterion_1_distribution_oracle_equivalence(toy_docs, toy_vocab, toy_attention):
    """Chained document -> random -> contrastive output matches a
    brute-force reimplementation to 1e-9 per term, in under a second."""
    t0 = time.perf_counter()
    assert len(toy_vocab) <= 20
    doc_dists, random_dist, contrastive = build_chain(
        toy_docs, toy_attention, toy_vocab
    )

    # brute force over plain dicts, no shared code with the pipeline
    b = 0.01
    oracle_doc = {}
    for d in toy_docs:
        agg = {}
        for word, w in zip(d.words, toy_attention[d.doc_id].weights):
            tid = toy_vocab.terms[word]
            agg[tid] = agg.get(tid, 0.0) + float(w)
        sat = {t: x / (b + x) for t, x in agg.items()}
        z = sum(math.exp(v) for v in sat.values())
        oracle_doc[d.doc_id] = {t: math.exp(v) / z for t, v in sat.items()}
    oracle_random = {}
    for masses in oracle_doc.values():
        for t, p in masses.items():
            oracle_random[t] = oracle_random.get(t, 0.0) + p / len(toy_docs)
    oracle_contrastive = {}
    for doc_id, masses in oracle_doc.items():
        gamma = {t: -p * math.log2(oracle_random[t]) for t, p in masses.items()}
        z = sum(math.exp(g) for g in gamma.values())
        oracle_contrastive[doc_id] = {t: math.exp(g) / z for t, g in gamma.items()}

    for doc_id, masses in oracle_doc.items():
        for t, p in masses.items():
            assert abs(doc_dists[doc_id].prob_of(t) - p) < 1e-9
    for t, p in oracle_random.items():
        assert abs(random_dist.prob_of(t) - p) < 1e-9
    for doc_id, masses in oracle_contrastive.items():
        for t, p in masses.items():
            assert abs(contrastive[doc_id].prob_of(t) - p) < 1e-9
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    ok(1, f"5-doc chained oracle agrees to 1e-9 per term ({elapsed:.3f}s)")


def test_criterion_2_normalization_suite(toy_vocab):
    """Every emitted distribution over 1000+ randomized documents sums
    to 1 within 1e-6."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    words = list(toy_vocab.terms)
    weighting = AttentionTermWeighting().fit(toy_vocab)
    lm = UnigramLanguageModel(mu=700.0).fit(toy_vocab)
    agg = RandomDistributionAggregator()
    doc_dists = []
    checked = 0
    for i in range(1000):
        n = int(rng.integers(1, 15))
        d = Document(f"n{i}", tuple(rng.choice(words, size=n).tolist()))
        dist = weighting.document_distribution(d, make_attention(d, rng))
        assert abs(dist.probs.sum() - 1.0) < 1e-6
        lm_dist = lm.lm_distribution(d)
        assert abs(lm_dist.probs.sum() - 1.0) < 1e-6
        agg.add(dist)
        doc_dists.append(dist)
        checked += 2
    random_dist = agg.result()
    assert abs(random_dist.probs.sum() - 1.0) < 1e-6
    checked += 1
    for dist in doc_dists:
        c = contrastive_distribution(dist, random_dist)
        assert abs(c.probs.sum() - 1.0) < 1e-6
        checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    ok(2, f"{checked} distributions over 1000 random docs sum to 1±1e-6 ({elapsed:.1f}s)")


def test_criterion_3_saturation_ablation():
    """Saturation off reproduces softmax of raw aggregates exactly, and
    the saturated weight at raw==b is exactly one half."""
    d = Document("d", ("a", "a", "b", "c", "b"))
    vocab = VocabularyBuilder().fit([d]).vocabulary_
    att = AttentionRecord("d", np.array([0.21, 0.02, 0.13, 0.07, 0.05]))

    no_sat = AttentionTermWeighting(saturation=False).fit(vocab)
    dist = no_sat.document_distribution(d, att)
    raw = {}
    for word, w in zip(d.words, att.weights):
        tid = vocab.terms[word]
        raw[tid] = raw.get(tid, 0.0) + float(w)
    terms = sorted(raw)
    expected = softmax(np.array([raw[t] for t in terms]))
    assert np.array_equal(dist.terms, np.array(terms))
    assert np.array_equal(dist.probs, expected)

    for b in (0.01, 0.23, 1.5):
        assert saturate(np.array([b]), b)[0] == 0.5

    default = AttentionTermWeighting()
    assert default.b == 0.01 and default.saturation is True
    ok(3, "no-saturation equals softmax of raw aggregates; x/(b+x)=0.5 at x=b")


def test_criterion_4_stopword_demotion():
    """A filler term with high attention everywhere stays in the vanilla
    top-3 of >=90% of documents but drops out of the contrastive top-3
    in >=90% of documents."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(55)
    docs, attention = [], {}
    n_docs = 50
    for i in range(n_docs):
        content = [f"w{i:02d}x{j}" for j in range(8)]
        words = tuple(["filler"] * 5 + content)
        d = Document(f"d{i:02d}", words)
        docs.append(d)
        weights = np.concatenate(
            [np.full(5, 0.08), rng.uniform(0.04, 0.06, size=8)]
        )
        attention[d.doc_id] = AttentionRecord(d.doc_id, weights)
    vocab = VocabularyBuilder().fit(docs).vocabulary_
    doc_dists, _, contrastive = build_chain(docs, attention, vocab)

    filler = vocab.terms["filler"]
    vanilla_top3 = sum(
        filler in {t for t, _ in doc_dists[d.doc_id].top_k(3)} for d in docs
    )
    contrastive_top3 = sum(
        filler in {t for t, _ in contrastive[d.doc_id].top_k(3)} for d in docs
    )
    assert vanilla_top3 >= 0.9 * n_docs
    assert contrastive_top3 <= 0.1 * n_docs
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    ok(
        4,
        f"filler in vanilla top-3 of {vanilla_top3}/{n_docs} docs, "
        f"contrastive top-3 of {contrastive_top3}/{n_docs} ({elapsed:.2f}s)",
    )


@pytest.fixture(scope="module")
def sampling_corpus():
    """2000 synthetic docs with ~30-term supports: 10k instances at 5/doc."""
    rng = np.random.default_rng(77)
    vocab_words = [f"v{i:03d}" for i in range(300)]
    docs, attention = [], {}
    for i in range(2000):
        words = tuple(rng.choice(vocab_words, size=40).tolist())
        d = Document(f"c{i:04d}", words)
        docs.append(d)
        attention[d.doc_id] = make_attention(d, rng)
    vocab = VocabularyBuilder().fit(docs).vocabulary_
    _, _, contrastive = build_chain(docs, attention, vocab)
    return docs, vocab, contrastive


def test_criterion_5_sampling_statistics(sampling_corpus):
    """Set lengths fit a truncated Poisson(3) and single draws respect
    the distribution masses."""
    docs, vocab, contrastive = sampling_corpus
    sampler = RopPairSampler(lam=3.0, pairs_per_doc=5, seed=13).fit(vocab)
    lengths = []
    for d in docs:
        instances, _ = sampler.sample_document(d, contrastive[d.doc_id])
        lengths.extend(len(i.set_hi) for i in instances)
    assert len(lengths) >= 10_000
    mean = float(np.mean(lengths))
    assert 2.7 <= mean <= 3.3

    # chi-square against Poisson(3) truncated to [1, max support]
    max_obs = max(lengths)
    ks = np.arange(1, max(max_obs + 1, 12))
    pmf = sp_stats.poisson.pmf(ks, 3.0)
    pmf /= pmf.sum()
    observed = np.array([lengths.count(int(k)) for k in ks], dtype=float)
    expected = pmf * len(lengths)
    # group the tail so every expected bin has mass >= 5
    while expected[-1] < 5 and len(expected) > 2:
        expected[-2] += expected[-1]
        observed[-2] += observed[-1]
        expected, observed = expected[:-1], observed[:-1]
    chi2, p = sp_stats.chisquare(observed, expected)
    assert p > 0.01

    # single-draw frequencies vs masses, 3-sigma binomial bounds
    from repwords.distributions import TermDistribution

    dist = TermDistribution(np.array([0, 1, 2]), np.array([0.7, 0.2, 0.1]), "contrastive")
    counts = {0: 0, 1: 0, 2: 0}
    trials = 10_000
    for seed in range(trials):
        (t,) = sample_word_set(np.random.default_rng(seed), dist, 1)
        counts[t] += 1
    for tid, prob in zip([0, 1, 2], [0.7, 0.2, 0.1]):
        sigma = math.sqrt(trials * prob * (1 - prob))
        assert abs(counts[tid] - trials * prob) <= 3 * sigma
    ok(
        5,
        f"{len(lengths)} instances: mean length {mean:.3f} in [2.7,3.3], "
        f"chi-square p={p:.3f} > 0.01, single-draw freqs within 3 sigma",
    )


def test_criterion_6_label_soundness_and_determinism(tmp_path):
    """Re-scoring reproduces every label; identical seeds give byte-identical
    instance files under different worker counts."""
    rng = np.random.default_rng(3)
    vocab_words = [f"q{i:02d}" for i in range(60)]
    rows, records = [], []
    for i in range(60):
        words = rng.choice(vocab_words, size=15).tolist()
        rows.append((f"s{i:02d}", " ".join(words)))
    corpus_path = tmp_path / "corpus.jsonl"
    write_corpus(corpus_path, rows)
    docs = [Document.from_text(i, t) for i, t in rows]
    att_path = tmp_path / "att.jsonl"
    write_attention_file(att_path, [make_attention(d, rng) for d in docs])

    hashes = []
    for run, workers in (("r1", 1), ("r2", 1), ("r3", 3)):
        out = tmp_path / run
        out.mkdir()
        code = cli_main(
            [
                "run",
                "--corpus", str(corpus_path),
                "--attention", str(att_path),
                "--vocab", str(out / "vocab.jsonl"),
                "--doc-dists", str(out / "dd.jsonl"),
                "--random-dist", str(out / "rd.jsonl"),
                "--contrastive-dists", str(out / "cd.jsonl"),
                "--instances", str(out / "instances.jsonl"),
                "--seed", "21",
                "--workers", str(workers),
            ]
        )
        assert code == 0
        hashes.append(
            hashlib.sha256((out / "instances.jsonl").read_bytes()).hexdigest()
        )
    assert len(set(hashes)) == 1

    # label soundness: recompute every pair's scores from the dist files
    from repwords.corpus import load_vocabulary
    from repwords.distributions import load_distributions
    from repwords.sampler import load_instances

    out = tmp_path / "r1"
    vocab = load_vocabulary(out / "vocab.jsonl")
    dists = load_distributions(out / "cd.jsonl")
    instances = load_instances(out / "instances.jsonl")
    assert instances
    violations = 0
    for inst in instances:
        dist = dists[inst.doc_id]
        hi = sum(math.log(dist.prob_of(vocab.terms[w])) for w in inst.set_hi)
        lo = sum(math.log(dist.prob_of(vocab.terms[w])) for w in inst.set_lo)
        if not hi > lo:
            violations += 1
    assert violations == 0
    ok(
        6,
        f"{len(instances)} instances rescored with 0 violations; "
        "3 runs (workers 1/1/3) byte-identical",
    )


def test_criterion_7_unigram_lm_correctness(toy_docs, toy_vocab):
    """Closed-form Dirichlet oracle at 1e-12 relative; mu=0 is MLE;
    empty set scores 0."""
    from collections import Counter

    lm = UnigramLanguageModel(mu=2000.0).fit(toy_vocab)
    for d in toy_docs:
        in_vocab = [w for w in d.words if w in toy_vocab.terms]
        counts = Counter(in_vocab)
        for term, tid in toy_vocab.terms.items():
            p_c = toy_vocab.collection_freq[tid] / toy_vocab.total_tokens
            expected = (counts.get(term, 0) + 2000.0 * p_c) / (len(in_vocab) + 2000.0)
            got = lm.term_prob(d, tid)
            assert abs(got - expected) <= 1e-12 * expected

    mle = UnigramLanguageModel(mu=0.0).fit(toy_vocab)
    d = toy_docs[1]
    counts = Counter(d.words)
    for term in set(d.words):
        assert mle.term_prob(d, toy_vocab.terms[term]) == pytest.approx(
            counts[term] / d.length, rel=1e-12
        )

    assert lm.set_log_likelihood(toy_docs[0], []) == 0.0
    ok(7, "Dirichlet oracle at 1e-12 rel; mu=0 equals MLE; empty set scores 0")
