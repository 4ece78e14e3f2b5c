import hashlib
import json
import os

import numpy as np
import pytest

from conftest import make_attention, write_attention_file, write_corpus
from repwords.cli import main
from repwords.corpus import Document


def sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


@pytest.fixture
def fixture_files(tmp_path):
    rng = np.random.default_rng(23)
    shared = ["the", "of", "and"]
    topics = ["lung", "fibrosis", "scar", "tissue", "air", "chest", "xray", "disease"]
    rows = []
    for i in range(12):
        words = rng.choice(topics, size=6).tolist() + shared * 2
        rng.shuffle(words)
        rows.append((f"doc{i:02d}", " ".join(words)))
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, rows)

    docs = [Document.from_text(i, t) for i, t in rows]
    attention = tmp_path / "attention.jsonl"
    write_attention_file(attention, [make_attention(d, rng) for d in docs])
    return tmp_path, corpus, attention


def run_cli(*args):
    return main([str(a) for a in args])


def pipeline_args(work, corpus, attention, out_dir, **extra):
    args = [
        "run",
        "--corpus", corpus,
        "--attention", attention,
        "--vocab", out_dir / "vocab.jsonl",
        "--doc-dists", out_dir / "doc_dists.jsonl",
        "--random-dist", out_dir / "random.jsonl",
        "--contrastive-dists", out_dir / "contrastive.jsonl",
        "--instances", out_dir / "instances.jsonl",
        "--seed", 7,
        "--lambda", 2.0,
        "--pairs", 3,
    ]
    for key, value in extra.items():
        args += [f"--{key}", value]
    return args


class TestStageCommands:
    def test_build_vocab(self, fixture_files, capsys):
        tmp, corpus, _ = fixture_files
        out = tmp / "vocab.jsonl"
        assert run_cli("build-vocab", "--input", corpus, "--output", out) == 0
        lines = out.read_text().strip().splitlines()
        header = json.loads(lines[0])
        assert header["num_documents"] == 12
        assert len(lines) == 1 + 11  # 8 topics + 3 shared words

    def test_stagewise_equals_run(self, fixture_files, tmp_path):
        tmp, corpus, attention = fixture_files
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir(), b.mkdir()
        assert run_cli(*pipeline_args(tmp, corpus, attention, a)) == 0

        # same pipeline, one CLI stage at a time
        assert run_cli("build-vocab", "--input", corpus, "--output", b / "vocab.jsonl") == 0
        assert run_cli(
            "doc-dists", "--input", corpus, "--attention", attention,
            "--vocab", b / "vocab.jsonl", "--output", b / "doc_dists.jsonl",
        ) == 0
        assert run_cli(
            "aggregate-random", "--dists", b / "doc_dists.jsonl",
            "--output", b / "random.jsonl",
        ) == 0
        assert run_cli(
            "contrastive-dists", "--dists", b / "doc_dists.jsonl",
            "--random-dist", b / "random.jsonl", "--output", b / "contrastive.jsonl",
        ) == 0
        assert run_cli(
            "sample", "--input", corpus, "--vocab", b / "vocab.jsonl",
            "--mode", "bprop", "--dists", b / "contrastive.jsonl",
            "--lambda", 2.0, "--pairs", 3, "--seed", 7,
            "--output", b / "instances.jsonl",
        ) == 0
        for name in ("vocab", "doc_dists", "random", "contrastive", "instances"):
            assert sha256(a / f"{name}.jsonl") == sha256(b / f"{name}.jsonl"), name


class TestDeterminism:
    def test_byte_identical_across_runs_and_workers(self, fixture_files, tmp_path):
        tmp, corpus, attention = fixture_files
        hashes = []
        for name, workers in (("r1", 1), ("r2", 1), ("r4", 3)):
            out = tmp_path / name
            out.mkdir()
            code = run_cli(
                *pipeline_args(tmp, corpus, attention, out), "--workers", workers
            )
            assert code == 0
            hashes.append(sha256(out / "instances.jsonl"))
        assert len(set(hashes)) == 1

    def test_stage_skipping_preserves_outputs(self, fixture_files, tmp_path):
        tmp, corpus, attention = fixture_files
        out = tmp_path / "skip"
        out.mkdir()
        args = pipeline_args(tmp, corpus, attention, out)
        assert run_cli(*args) == 0
        before = {f: sha256(out / f) for f in os.listdir(out)}
        mtimes = {f: os.path.getmtime(out / f) for f in os.listdir(out)}
        assert run_cli(*args) == 0  # everything fresh: all stages skip
        after = {f: sha256(out / f) for f in os.listdir(out)}
        assert before == after
        assert mtimes == {f: os.path.getmtime(out / f) for f in os.listdir(out)}


class TestModes:
    def test_prop_mode_needs_no_attention(self, fixture_files, tmp_path):
        tmp, corpus, _ = fixture_files
        vocab = tmp_path / "vocab.jsonl"
        out = tmp_path / "instances.jsonl"
        assert run_cli("build-vocab", "--input", corpus, "--output", vocab) == 0
        assert run_cli(
            "sample", "--input", corpus, "--vocab", vocab, "--mode", "prop",
            "--mu", 50, "--seed", 1, "--output", out,
        ) == 0
        assert len(out.read_text().strip().splitlines()) > 0

    def test_document_mode_uses_vanilla_dists(self, fixture_files, tmp_path):
        tmp, corpus, attention = fixture_files
        out = tmp_path / "doc_mode"
        out.mkdir()
        assert run_cli(
            *pipeline_args(tmp, corpus, attention, out), "--mode", "document"
        ) == 0
        assert not (out / "contrastive.jsonl").exists()
        assert (out / "instances.jsonl").exists()


class TestDiagnostics:
    def test_inspect_table(self, fixture_files, tmp_path, capsys):
        tmp, corpus, attention = fixture_files
        out = tmp_path / "p"
        out.mkdir()
        assert run_cli(*pipeline_args(tmp, corpus, attention, out)) == 0
        stopfile = tmp_path / "stop.txt"
        stopfile.write_text("the\nof\nand\n")
        capsys.readouterr()
        code = run_cli(
            "inspect", "--doc-id", "doc00", "--top-k", 5, "--json",
            "--vocab", out / "vocab.jsonl",
            "--doc-dists", out / "doc_dists.jsonl",
            "--contrastive-dists", out / "contrastive.jsonl",
            "--stopwords", stopfile,
        )
        assert code == 0
        rows = [json.loads(l) for l in capsys.readouterr().out.strip().splitlines()]
        assert len(rows) == 5
        assert rows[0]["rank"] == 1

    def test_inspect_identical_docs_identical_tables(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        text = "alpha beta beta gamma delta"
        write_corpus(tmp_path / "c.jsonl", [("a", text), ("b", text)])
        docs = [Document.from_text(i, text) for i in ("a", "b")]
        att = make_attention(docs[0], rng)
        write_attention_file(
            tmp_path / "att.jsonl",
            [att, type(att)("b", att.weights)],
        )
        out = tmp_path / "o"
        out.mkdir()
        assert run_cli(
            *pipeline_args(tmp_path, tmp_path / "c.jsonl", tmp_path / "att.jsonl", out)
        ) == 0
        tables = []
        for doc_id in ("a", "b"):
            capsys.readouterr()
            assert run_cli(
                "inspect", "--doc-id", doc_id, "--top-k", 10, "--json",
                "--vocab", out / "vocab.jsonl",
                "--doc-dists", out / "doc_dists.jsonl",
                "--contrastive-dists", out / "contrastive.jsonl",
            ) == 0
            tables.append(
                [
                    {k: v for k, v in json.loads(l).items()}
                    for l in capsys.readouterr().out.strip().splitlines()
                ]
            )
        assert tables[0] == tables[1]

    def test_inspect_unknown_doc_is_data_error(self, fixture_files, tmp_path):
        tmp, corpus, attention = fixture_files
        out = tmp_path / "q"
        out.mkdir()
        assert run_cli(*pipeline_args(tmp, corpus, attention, out)) == 0
        code = run_cli(
            "inspect", "--doc-id", "nope",
            "--vocab", out / "vocab.jsonl",
            "--doc-dists", out / "doc_dists.jsonl",
            "--contrastive-dists", out / "contrastive.jsonl",
        )
        assert code == 2

    def test_stats(self, fixture_files, tmp_path, capsys):
        tmp, corpus, attention = fixture_files
        out = tmp_path / "s"
        out.mkdir()
        assert run_cli(*pipeline_args(tmp, corpus, attention, out)) == 0
        stopfile = tmp_path / "stop.txt"
        stopfile.write_text("the\nof\nand\n")
        capsys.readouterr()
        assert run_cli(
            "stats", "--instances", out / "instances.jsonl", "--stopwords", stopfile
        ) == 0
        report = json.loads(capsys.readouterr().out.strip())
        n_lines = len((out / "instances.jsonl").read_text().strip().splitlines())
        assert report["instances"] == n_lines
        assert sum(report["length_histogram"].values()) == n_lines
        assert 0.0 <= report["stopword_mass"] <= 1.0
        assert report["documents"] == 12

    def test_stats_missing_instances_is_data_error(self, tmp_path):
        assert run_cli("stats", "--instances", tmp_path / "none.jsonl") == 2


class TestExitCodes:
    def test_usage_error(self):
        assert run_cli("build-vocab") == 1

    def test_empty_corpus_fails_cleanly(self, tmp_path):
        corpus = tmp_path / "empty.jsonl"
        corpus.write_text("")
        code = run_cli(
            "run", "--corpus", corpus, "--mode", "prop",
            "--vocab", tmp_path / "v.jsonl", "--instances", tmp_path / "i.jsonl",
        )
        assert code == 2

    def test_malformed_corpus_is_data_error(self, tmp_path):
        corpus = tmp_path / "bad.jsonl"
        corpus.write_text("not json\n")
        assert run_cli(
            "build-vocab", "--input", corpus, "--output", tmp_path / "v.jsonl"
        ) == 2
