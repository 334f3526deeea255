from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from spelltutor.cli import main
from spelltutor.runtime import Transcript


@pytest.fixture(scope="module")
def batch_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("batch")
    runner = CliRunner()
    result = runner.invoke(main, ["batch-evaluate", "--out", str(out)])
    return result, out


def test_batch_evaluate_bundled_corpus_yields_25_transcripts(batch_run):
    result, out = batch_run
    assert result.exit_code == 0, result.output
    transcripts = sorted(out.glob("*.transcript.jsonl"))
    assert len(transcripts) == 25
    assert "transcripts: 25" in result.output


def test_batch_transcripts_carry_intervention_metadata(batch_run):
    _, out = batch_run
    for path in sorted(out.glob("*.transcript.jsonl")):
        transcript = Transcript.from_jsonl(path.read_text(encoding="utf-8"))
        count = transcript.meta["intervention_count"]
        assert 2 <= count <= 5, path.name
        for row in transcript.interventions():
            assert row["question_type"]
            assert row["hypothesis"]
            assert row["rationale"]


def test_batch_summary_and_figures_exist(batch_run):
    _, out = batch_run
    summary = out / "summary.tsv"
    assert summary.exists()
    lines = summary.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 26  # header + one row per conversation
    header = lines[0].split("\t")
    assert "interventions" in header and "templates" in header
    assert (out / "interventions_per_conversation.png").exists()
    assert (out / "hypothesis_usage.png").exists()


def test_batch_empty_corpus_exits_zero(tmp_path):
    corpus = tmp_path / "empty.jsonl"
    corpus.write_text("", encoding="utf-8")
    runner = CliRunner()
    result = runner.invoke(
        main, ["batch-evaluate", "--corpus", str(corpus), "--out", str(tmp_path / "out")]
    )
    assert result.exit_code == 0
    assert "transcripts: 0" in result.output


def test_batch_skips_rows_without_errors(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    rows = [
        {"sample_id": "x1", "text": "The cat sat.", "errors": []},
        {
            "sample_id": "x2",
            "text": "She was reeching for the book.",
            "errors": [{"attempt": "reeching", "target": "reaching"}],
        },
    ]
    corpus.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    runner = CliRunner()
    result = runner.invoke(
        main, ["batch-evaluate", "--corpus", str(corpus), "--out", str(tmp_path / "out")]
    )
    assert result.exit_code == 0
    assert "x1 has no marked misspelling" in result.output
    assert len(list((tmp_path / "out").glob("*.transcript.jsonl"))) == 1


def test_batch_scripted_policy(tmp_path):
    script = tmp_path / "script.json"
    script.write_text(
        json.dumps(
            [
                "The builder constructed the building.",
                [3, 9],
                ["structure", "insstruct"],
            ]
        ),
        encoding="utf-8",
    )
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text(
        json.dumps(
            {
                "sample_id": "s",
                "text": "I like how the art of constractd.",
                "errors": [{"attempt": "constractd", "target": "constructed"}],
            }
        ),
        encoding="utf-8",
    )
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "batch-evaluate",
            "--corpus",
            str(corpus),
            "--policy",
            f"scripted:{script}",
            "--out",
            str(tmp_path / "out"),
        ],
    )
    assert result.exit_code == 0, result.output
    transcript = Transcript.from_jsonl(
        next((tmp_path / "out").glob("*.transcript.jsonl")).read_text(encoding="utf-8")
    )
    assert [e.kind for e in transcript.events][-1] == "finished"


def test_bad_policy_is_config_error(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main, ["batch-evaluate", "--policy", "sometimes-right", "--out", str(tmp_path / "o")]
    )
    assert result.exit_code == 3


def test_remote_without_url_is_config_error(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main, ["batch-evaluate", "--backend", "remote", "--out", str(tmp_path / "o")]
    )
    assert result.exit_code == 3


def test_check_command_prints_report():
    runner = CliRunner()
    result = runner.invoke(main, ["check", "She was reeching for the book."])
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["contexts"][0]["target"] == "reaching"


def test_determinism_across_two_batch_runs(tmp_path):
    runner = CliRunner()
    out1, out2 = tmp_path / "one", tmp_path / "two"
    for out in (out1, out2):
        result = runner.invoke(main, ["batch-evaluate", "--out", str(out)])
        assert result.exit_code == 0
    for path1 in sorted(out1.glob("*.transcript.jsonl")):
        path2 = out2 / path1.name
        assert path1.read_bytes() == path2.read_bytes()
    assert (out1 / "summary.tsv").read_bytes() == (out2 / "summary.tsv").read_bytes()
