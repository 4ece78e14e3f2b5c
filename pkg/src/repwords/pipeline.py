"""Stage orchestration: each CLI subcommand maps to one stage function.

Stages communicate only through line-delimited files, so any stage can
be re-run in isolation. ``run_pipeline`` chains them with mtime-based
skipping and collects one machine-readable report per stage.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable


from . import corpus as corpus_mod
from . import distributions as dist_mod
from . import sampler as sampler_mod
from .corpus import Document, VocabularyBuilder
from .distributions import (
    RANDOM_DIST_ID,
    AttentionTermWeighting,
    RandomDistributionAggregator,
    TermDistribution,
    contrastive_distribution,
)
from .errors import DataError
from .sampler import RopPairSampler
from .unigram import DEFAULT_MU, UnigramLanguageModel


@dataclass
class StageReport:
    stage: str
    status: str = "ok"
    seconds: float = 0.0
    documents: int = 0
    skipped: int = 0
    instances: int = 0
    ties_resampled: int = 0
    budget_exhausted: int = 0
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        rec = {
            "stage": self.stage,
            "status": self.status,
            "seconds": round(self.seconds, 4),
            "documents": self.documents,
            "skipped": self.skipped,
            "instances": self.instances,
            "ties_resampled": self.ties_resampled,
            "budget_exhausted": self.budget_exhausted,
        }
        rec.update(self.detail)
        return json.dumps(rec)


def _chunks(items: list, n: int) -> list[list]:
    if n <= 1 or len(items) <= 1:
        return [items]
    size = (len(items) + n - 1) // n
    return [items[i : i + size] for i in range(0, len(items), size)]


# --- stage: build-vocab --------------------------------------------------


def build_vocab_stage(corpus_path, vocab_path, min_count: int = 1) -> StageReport:
    t0 = time.perf_counter()
    builder = VocabularyBuilder(min_count=min_count)
    with open(corpus_path, encoding="utf-8") as fh:
        builder.fit(corpus_mod.read_documents(fh))
    vocab = builder.vocabulary_
    with open(vocab_path, "w", encoding="utf-8") as fh:
        corpus_mod.write_vocabulary(vocab, fh)
    return StageReport(
        "build-vocab",
        seconds=time.perf_counter() - t0,
        documents=vocab.num_documents,
        detail={"terms": len(vocab), "total_tokens": vocab.total_tokens},
    )


# --- stage: doc-dists ----------------------------------------------------


def _doc_dists_chunk(args):
    docs, atts, b, saturation, vocab = args
    weighting = AttentionTermWeighting(b=b, saturation=saturation).fit(vocab)
    out = []
    for doc, att in zip(docs, atts):
        if att is None:
            out.append((doc.doc_id, None, "no attention record"))
            continue
        try:
            dist = weighting.document_distribution(doc, att)
        except DataError as e:
            out.append((doc.doc_id, None, str(e)))
            continue
        out.append((doc.doc_id, dist, ""))
    return out


def doc_dists_stage(
    corpus_path,
    attention_path,
    vocab_path,
    output_path,
    b: float = 0.01,
    saturation: bool = True,
    workers: int = 1,
) -> StageReport:
    t0 = time.perf_counter()
    vocab = corpus_mod.load_vocabulary(vocab_path)
    docs = corpus_mod.load_documents(corpus_path)
    attention = dist_mod.load_attention(attention_path)
    atts = [attention.get(d.doc_id) for d in docs]

    tasks = [
        (dc, ac, b, saturation, vocab)
        for dc, ac in zip(_chunks(docs, workers), _chunks(atts, workers))
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_doc_dists_chunk, tasks))
    else:
        results = [_doc_dists_chunk(t) for t in tasks]

    report = StageReport("doc-dists", documents=len(docs))
    skips = []
    with open(output_path, "w", encoding="utf-8") as fh:
        for chunk in results:
            for doc_id, dist, reason in chunk:
                if dist is None:
                    report.skipped += 1
                    skips.append({"id": doc_id, "reason": reason})
                    continue
                dist_mod.write_distribution(doc_id, dist, fh)
    report.detail["skips"] = skips
    report.seconds = time.perf_counter() - t0
    return report


# --- stage: aggregate-random ---------------------------------------------


def aggregate_random_stage(dists_path, output_path) -> StageReport:
    t0 = time.perf_counter()
    agg = RandomDistributionAggregator()
    with open(dists_path, encoding="utf-8") as fh:
        for _, dist in dist_mod.read_distributions(fh):
            agg.add(dist)
    random_dist = agg.result()
    with open(output_path, "w", encoding="utf-8") as fh:
        dist_mod.write_distribution(RANDOM_DIST_ID, random_dist, fh)
    return StageReport(
        "aggregate-random",
        seconds=time.perf_counter() - t0,
        documents=agg.count,
        detail={"support": len(random_dist)},
    )


# --- stage: contrastive-dists --------------------------------------------


def _contrastive_chunk(args):
    items, random_dist = args
    return [
        (doc_id, contrastive_distribution(dist, random_dist)) for doc_id, dist in items
    ]


def contrastive_dists_stage(
    dists_path, random_dist_path, output_path, workers: int = 1
) -> StageReport:
    t0 = time.perf_counter()
    random_dist = _load_random_dist(random_dist_path)
    with open(dists_path, encoding="utf-8") as fh:
        items = list(dist_mod.read_distributions(fh))

    tasks = [(chunk, random_dist) for chunk in _chunks(items, workers)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_contrastive_chunk, tasks))
    else:
        results = [_contrastive_chunk(t) for t in tasks]

    with open(output_path, "w", encoding="utf-8") as fh:
        for chunk in results:
            for doc_id, dist in chunk:
                dist_mod.write_distribution(doc_id, dist, fh)
    return StageReport(
        "contrastive-dists",
        seconds=time.perf_counter() - t0,
        documents=len(items),
    )


def _load_random_dist(path) -> TermDistribution:
    dists = dist_mod.load_distributions(path)
    if RANDOM_DIST_ID in dists:
        return dists[RANDOM_DIST_ID]
    if len(dists) == 1:
        return next(iter(dists.values()))
    raise DataError(f"{path} does not contain a '{RANDOM_DIST_ID}' record")


# --- stage: sample -------------------------------------------------------


def _sample_chunk(args):
    pairs, params, vocab, lm = args
    sampler = RopPairSampler(**params).fit(vocab, lm)
    out = []
    for doc, dist in pairs:
        out.append(sampler.sample_document(doc, dist))
    return out


def sample_stage(
    corpus_path,
    vocab_path,
    output_path,
    mode: str = "bprop",
    dists_path=None,
    random_dist_path=None,
    lam: float = sampler_mod.DEFAULT_LAMBDA,
    pairs_per_doc: int = sampler_mod.DEFAULT_PAIRS_PER_DOC,
    scorer: str = "distribution-product",
    seed: int = 0,
    mu: float = DEFAULT_MU,
    workers: int = 1,
    max_resample_attempts: int = sampler_mod.DEFAULT_MAX_RESAMPLE_ATTEMPTS,
) -> StageReport:
    t0 = time.perf_counter()
    vocab = corpus_mod.load_vocabulary(vocab_path)
    docs = corpus_mod.load_documents(corpus_path)
    lm = UnigramLanguageModel(mu=mu).fit(vocab)

    report = StageReport("sample", documents=len(docs))
    skips = []
    pairs: list[tuple[Document, TermDistribution]] = []
    if mode in ("bprop", "document"):
        if dists_path is None:
            raise DataError(f"mode {mode!r} needs a distribution file")
        dists = dist_mod.load_distributions(dists_path)
        dists.pop(RANDOM_DIST_ID, None)
        kinds = {d.kind for d in dists.values()}
        if mode == "bprop" and kinds == {"document"}:
            # doc-level file given directly: derive contrastive on the fly
            if random_dist_path is None:
                raise DataError(
                    "mode 'bprop' over document distributions needs --random-dist"
                )
            random_dist = _load_random_dist(random_dist_path)
            dists = {
                k: contrastive_distribution(v, random_dist) for k, v in dists.items()
            }
        for doc in docs:
            dist = dists.get(doc.doc_id)
            if dist is None:
                report.skipped += 1
                skips.append({"id": doc.doc_id, "reason": "no distribution"})
                continue
            pairs.append((doc, dist))
    elif mode == "prop":
        for doc in docs:
            try:
                pairs.append((doc, lm.lm_distribution(doc)))
            except DataError as e:
                report.skipped += 1
                skips.append({"id": doc.doc_id, "reason": str(e)})
    else:
        raise DataError(f"unknown mode {mode!r}")

    params = dict(
        lam=lam,
        pairs_per_doc=pairs_per_doc,
        mode=mode,
        scorer=scorer,
        seed=seed,
        max_resample_attempts=max_resample_attempts,
    )
    tasks = [(chunk, params, vocab, lm) for chunk in _chunks(pairs, workers)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sample_chunk, tasks))
    else:
        results = [_sample_chunk(t) for t in tasks]

    instances = []
    for chunk in results:
        for inst_list, doc_report in chunk:
            instances.extend(inst_list)
            report.ties_resampled += doc_report.ties_resampled
            report.budget_exhausted += doc_report.budget_exhausted
            if doc_report.skipped:
                report.skipped += 1
                skips.append({"id": doc_report.doc_id, "reason": doc_report.reason})
    instances.sort(key=lambda i: i.doc_id)  # stable: pair order preserved
    with open(output_path, "w", encoding="utf-8") as fh:
        for inst in instances:
            sampler_mod.write_instance(inst, fh)
    report.instances = len(instances)
    report.detail["skips"] = skips
    report.seconds = time.perf_counter() - t0

    with open(str(output_path) + ".report.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    return report


# --- full pipeline -------------------------------------------------------


@dataclass
class PipelineConfig:
    corpus: str = ""
    attention: str = ""
    vocab: str = "vocab.jsonl"
    doc_dists: str = "doc_dists.jsonl"
    random_dist: str = "random_dist.jsonl"
    contrastive_dists: str = "contrastive_dists.jsonl"
    instances: str = "instances.jsonl"
    min_count: int = 1
    b: float = 0.01
    no_saturation: bool = False
    mu: float = DEFAULT_MU
    lam: float = sampler_mod.DEFAULT_LAMBDA
    pairs: int = sampler_mod.DEFAULT_PAIRS_PER_DOC
    seed: int = 0
    mode: str = "bprop"
    scorer: str = "distribution-product"
    workers: int = 1
    stopwords: str = ""

    # config-file keys are the field names; "lambda" is accepted for lam
    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        cfg = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise DataError(f"config line {lineno}: expected key = value")
                key, _, value = line.partition("=")
                cfg.set_key(key.strip(), value.strip())
        return cfg

    def set_key(self, key: str, value) -> None:
        key = key.replace("-", "_")
        if key == "lambda":
            key = "lam"
        if not hasattr(self, key):
            raise DataError(f"unknown config key {key!r}")
        current = getattr(self, key)
        if isinstance(current, bool):
            value = str(value).lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        else:
            value = str(value)
        setattr(self, key, value)


def _fresh(output: str, inputs: list[str]) -> bool:
    if not os.path.exists(output):
        return False
    out_mtime = os.path.getmtime(output)
    return all(
        os.path.exists(p) and os.path.getmtime(p) <= out_mtime for p in inputs
    )


def run_pipeline(
    cfg: PipelineConfig, force: bool = False, log: Callable[[str], None] | None = None
) -> list[StageReport]:
    """Run build-vocab, doc-dists, aggregate-random, contrastive-dists and
    sample in order, skipping stages whose outputs are newer than their
    inputs."""
    if not cfg.corpus:
        raise DataError("config is missing the corpus path")
    reports: list[StageReport] = []

    def stage(name, output, inputs, fn):
        if not force and _fresh(output, inputs):
            rep = StageReport(name, status="skipped")
            reports.append(rep)
        else:
            rep = fn()
            reports.append(rep)
        if log:
            log(rep.to_json())
        return rep

    stage(
        "build-vocab",
        cfg.vocab,
        [cfg.corpus],
        lambda: build_vocab_stage(cfg.corpus, cfg.vocab, cfg.min_count),
    )
    needs_attention = cfg.mode in ("bprop", "document")
    if needs_attention:
        if not cfg.attention:
            raise DataError(f"mode {cfg.mode!r} needs an attention file")
        stage(
            "doc-dists",
            cfg.doc_dists,
            [cfg.corpus, cfg.attention, cfg.vocab],
            lambda: doc_dists_stage(
                cfg.corpus,
                cfg.attention,
                cfg.vocab,
                cfg.doc_dists,
                b=cfg.b,
                saturation=not cfg.no_saturation,
                workers=cfg.workers,
            ),
        )
    if cfg.mode == "bprop":
        stage(
            "aggregate-random",
            cfg.random_dist,
            [cfg.doc_dists],
            lambda: aggregate_random_stage(cfg.doc_dists, cfg.random_dist),
        )
        stage(
            "contrastive-dists",
            cfg.contrastive_dists,
            [cfg.doc_dists, cfg.random_dist],
            lambda: contrastive_dists_stage(
                cfg.doc_dists, cfg.random_dist, cfg.contrastive_dists, cfg.workers
            ),
        )
    sample_dists = {
        "bprop": cfg.contrastive_dists,
        "document": cfg.doc_dists,
        "prop": None,
    }[cfg.mode]
    sample_inputs = [cfg.corpus, cfg.vocab] + ([sample_dists] if sample_dists else [])
    stage(
        "sample",
        cfg.instances,
        sample_inputs,
        lambda: sample_stage(
            cfg.corpus,
            cfg.vocab,
            cfg.instances,
            mode=cfg.mode,
            dists_path=sample_dists,
            lam=cfg.lam,
            pairs_per_doc=cfg.pairs,
            scorer=cfg.scorer,
            seed=cfg.seed,
            mu=cfg.mu,
            workers=cfg.workers,
        ),
    )
    return reports
