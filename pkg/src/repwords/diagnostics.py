"""Diagnostics over computed distributions and instance files."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .corpus import Vocabulary
from .distributions import TermDistribution
from .errors import UnknownDocumentError
from .sampler import RopInstance


def load_stopwords(path) -> set[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.add(word)
    return words


@dataclass
class TermTableRow:
    rank: int
    vanilla_term: str
    vanilla_prob: float
    vanilla_stopword: bool
    contrastive_term: str
    contrastive_prob: float
    contrastive_stopword: bool


def term_table(
    doc_id: str,
    doc_dists: dict[str, TermDistribution],
    contrastive_dists: dict[str, TermDistribution],
    vocab: Vocabulary,
    top_k: int,
    stopwords: set[str] | None = None,
) -> list[TermTableRow]:
    """Side-by-side top-k ranking under the vanilla document distribution
    and the contrastive distribution. top_k is clipped to the support."""
    stopwords = stopwords or set()
    if doc_id not in doc_dists or doc_id not in contrastive_dists:
        raise UnknownDocumentError(doc_id)
    vanilla = doc_dists[doc_id].top_k(top_k)
    contrastive = contrastive_dists[doc_id].top_k(top_k)
    rows = []
    for rank, ((vt, vp), (ct, cp)) in enumerate(zip(vanilla, contrastive), 1):
        v_term, c_term = vocab.term(vt), vocab.term(ct)
        rows.append(
            TermTableRow(
                rank=rank,
                vanilla_term=v_term,
                vanilla_prob=vp,
                vanilla_stopword=v_term in stopwords,
                contrastive_term=c_term,
                contrastive_prob=cp,
                contrastive_stopword=c_term in stopwords,
            )
        )
    return rows


def format_term_table(rows: list[TermTableRow]) -> str:
    lines = [
        f"{'rank':>4}  {'vanilla':<20} {'prob':>10}  sw   "
        f"{'contrastive':<20} {'prob':>10}  sw"
    ]
    for r in rows:
        lines.append(
            f"{r.rank:>4}  {r.vanilla_term:<20} {r.vanilla_prob:>10.6f}  "
            f"{'*' if r.vanilla_stopword else ' '}    "
            f"{r.contrastive_term:<20} {r.contrastive_prob:>10.6f}  "
            f"{'*' if r.contrastive_stopword else ' '}"
        )
    return "\n".join(lines)


def instance_stats(
    instances: list[RopInstance],
    stopwords: set[str] | None = None,
    sample_report: dict | None = None,
) -> dict:
    """Set-length histogram, stopword mass in sampled sets, and the
    tie/skip accounting carried over from the sampling stage."""
    stopwords = stopwords or set()
    lengths = Counter(len(i.set_hi) for i in instances)
    total_words = sum(2 * len(i.set_hi) for i in instances)
    stop_words = sum(
        sum(1 for w in i.set_hi if w in stopwords)
        + sum(1 for w in i.set_lo if w in stopwords)
        for i in instances
    )
    n = len(instances)
    mean_len = (sum(k * v for k, v in lengths.items()) / n) if n else 0.0
    report = {
        "instances": n,
        "length_histogram": {str(k): lengths[k] for k in sorted(lengths)},
        "mean_set_length": mean_len,
        "stopword_mass": (stop_words / total_words) if total_words else 0.0,
        "ties_resampled": 0,
        "budget_exhausted": 0,
        "documents": 0,
        "skipped": 0,
    }
    if sample_report:
        for key in ("ties_resampled", "budget_exhausted", "documents", "skipped"):
            report[key] = sample_report.get(key, 0)
    return report


def load_sample_report(path) -> dict | None:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.loads(fh.readline())
    except FileNotFoundError:
        return None
