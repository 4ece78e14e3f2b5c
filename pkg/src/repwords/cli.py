"""Command-line entry points.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import json
import sys
import traceback

import click

from . import corpus as corpus_mod
from . import diagnostics, pipeline
from . import distributions as dist_mod
from . import sampler as sampler_mod
from .errors import DataError
from .unigram import DEFAULT_MU


@click.group()
def cli():
    """Build representative word-set pre-training data from a corpus and
    contextual attention weights."""


@cli.command("build-vocab")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--min-count", default=1, show_default=True, type=int)
def build_vocab_cmd(input_path, output_path, min_count):
    """Count terms over the corpus and write the vocabulary file."""
    rep = pipeline.build_vocab_stage(input_path, output_path, min_count)
    click.echo(rep.to_json())


@cli.command("doc-dists")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--attention", required=True, type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option("--b", default=0.01, show_default=True, type=float)
@click.option("--no-saturation", is_flag=True, default=False)
@click.option("--workers", default=1, show_default=True, type=int)
@click.option("--output", "output_path", required=True, type=click.Path())
def doc_dists_cmd(input_path, attention, vocab, b, no_saturation, workers, output_path):
    """Compute per-document attention term distributions."""
    rep = pipeline.doc_dists_stage(
        input_path,
        attention,
        vocab,
        output_path,
        b=b,
        saturation=not no_saturation,
        workers=workers,
    )
    click.echo(rep.to_json())


@cli.command("aggregate-random")
@click.option("--dists", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
def aggregate_random_cmd(dists, output_path):
    """Average document distributions into the random term distribution."""
    rep = pipeline.aggregate_random_stage(dists, output_path)
    click.echo(rep.to_json())


@cli.command("contrastive-dists")
@click.option("--dists", required=True, type=click.Path(exists=True))
@click.option("--random-dist", required=True, type=click.Path(exists=True))
@click.option("--workers", default=1, show_default=True, type=int)
@click.option("--output", "output_path", required=True, type=click.Path())
def contrastive_dists_cmd(dists, random_dist, workers, output_path):
    """Compute per-document contrastive distributions."""
    rep = pipeline.contrastive_dists_stage(dists, random_dist, output_path, workers)
    click.echo(rep.to_json())


@cli.command("sample")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option(
    "--mode",
    default="bprop",
    show_default=True,
    type=click.Choice(sampler_mod.MODES),
)
@click.option("--dists", default=None, type=click.Path(exists=True))
@click.option("--random-dist", default=None, type=click.Path(exists=True))
@click.option("--lambda", "lam", default=sampler_mod.DEFAULT_LAMBDA, show_default=True, type=float)
@click.option("--pairs", default=sampler_mod.DEFAULT_PAIRS_PER_DOC, show_default=True, type=int)
@click.option(
    "--scorer",
    default="distribution-product",
    show_default=True,
    type=click.Choice(sampler_mod.SCORERS),
)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--mu", default=DEFAULT_MU, show_default=True, type=float)
@click.option("--workers", default=1, show_default=True, type=int)
@click.option("--output", "output_path", required=True, type=click.Path())
def sample_cmd(
    input_path, vocab, mode, dists, random_dist, lam, pairs, scorer, seed, mu, workers, output_path
):
    """Sample labeled word-set pairs and write the instance file."""
    rep = pipeline.sample_stage(
        input_path,
        vocab,
        output_path,
        mode=mode,
        dists_path=dists,
        random_dist_path=random_dist,
        lam=lam,
        pairs_per_doc=pairs,
        scorer=scorer,
        seed=seed,
        mu=mu,
        workers=workers,
    )
    click.echo(rep.to_json())


def _config_from_options(config_path, overrides) -> pipeline.PipelineConfig:
    cfg = (
        pipeline.PipelineConfig.from_file(config_path)
        if config_path
        else pipeline.PipelineConfig()
    )
    for key, value in overrides.items():
        if value is not None:
            cfg.set_key(key, value)
    return cfg


_CONFIG_OPTIONS = [
    ("corpus", str),
    ("attention", str),
    ("vocab", str),
    ("doc-dists", str),
    ("random-dist", str),
    ("contrastive-dists", str),
    ("instances", str),
    ("min-count", int),
    ("b", float),
    ("mu", float),
    ("lambda", float),
    ("pairs", int),
    ("seed", int),
    ("mode", str),
    ("scorer", str),
    ("workers", int),
    ("stopwords", str),
]


def _with_config_options(fn):
    fn = click.option("--no-saturation", default=None, is_flag=True)(fn)
    for name, typ in reversed(_CONFIG_OPTIONS):
        fn = click.option(f"--{name}", default=None, type=typ)(fn)
    return fn


@cli.command("run")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--force", is_flag=True, default=False, help="Re-run every stage.")
@click.option("--report", "report_path", default=None, type=click.Path())
@_with_config_options
def run_cmd(config_path, force, report_path, **overrides):
    """Run the full pipeline; stages with up-to-date outputs are skipped."""
    cfg = _config_from_options(config_path, overrides)
    reports = pipeline.run_pipeline(cfg, force=force, log=click.echo)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            for rep in reports:
                fh.write(rep.to_json() + "\n")


@cli.command("inspect")
@click.option("--doc-id", required=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--top-k", default=10, show_default=True, type=int)
@click.option("--json", "as_json", is_flag=True, default=False)
@_with_config_options
def inspect_cmd(doc_id, config_path, top_k, as_json, **overrides):
    """Show top-k terms under the vanilla and contrastive distributions."""
    cfg = _config_from_options(config_path, overrides)
    vocab = corpus_mod.load_vocabulary(cfg.vocab)
    doc_dists = dist_mod.load_distributions(cfg.doc_dists)
    contrastive = dist_mod.load_distributions(cfg.contrastive_dists)
    stopwords = diagnostics.load_stopwords(cfg.stopwords) if cfg.stopwords else set()
    rows = diagnostics.term_table(
        doc_id, doc_dists, contrastive, vocab, top_k, stopwords
    )
    if as_json:
        for r in rows:
            click.echo(json.dumps(vars(r)))
    else:
        click.echo(diagnostics.format_term_table(rows))


@cli.command("stats")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@_with_config_options
def stats_cmd(config_path, **overrides):
    """Summarize an instance file (lengths, stopword mass, skip rates)."""
    cfg = _config_from_options(config_path, overrides)
    try:
        instances = sampler_mod.load_instances(cfg.instances)
    except FileNotFoundError as e:
        raise DataError(f"instance file not found: {cfg.instances}") from e
    stopwords = diagnostics.load_stopwords(cfg.stopwords) if cfg.stopwords else set()
    sample_report = diagnostics.load_sample_report(cfg.instances + ".report.json")
    click.echo(json.dumps(diagnostics.instance_stats(instances, stopwords, sample_report)))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        return 1
    except (DataError, FileNotFoundError) as e:
        click.echo(f"data error: {e}", err=True)
        return 2
    except Exception:
        traceback.print_exc()
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
