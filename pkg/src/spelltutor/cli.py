"""Command line entry points: the batch transcript harness and the server."""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

import click

from .detection import AttemptContext
from .errors import SpellTutorError
from .linguistics import DATA_DIR
from .pipeline import InquiryEngine
from .planner import PlannerConfig
from .providers import offline_handle, remote_handle
from .reporting import render_figures, write_summary
from .runtime import (
    AlwaysCorrectPolicy,
    AlwaysWrongPolicy,
    ScriptedPolicy,
    run_headless,
)
from .service import ServiceConfig, create_app

DEFAULT_CORPUS = DATA_DIR / "evaluation_corpus.jsonl"

EXIT_OK = 0
EXIT_PIPELINE_FAILURE = 2
EXIT_CONFIG_ERROR = 3


def _make_policy(name: str):
    if name == "always-correct":
        return lambda: AlwaysCorrectPolicy()
    if name == "always-wrong":
        return lambda: AlwaysWrongPolicy()
    if name.startswith("scripted:"):
        path = Path(name.split(":", 1)[1])
        responses = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(responses, dict):
            responses = responses["responses"]
        return lambda: ScriptedPolicy(responses)
    raise click.BadParameter(f"unknown policy {name!r}")


def _engine(backend: str, config_path: str | None) -> InquiryEngine:
    planner = PlannerConfig()
    remote_url = ""
    credential_env = "SPELLTUTOR_API_KEY"
    if config_path:
        raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        planner = PlannerConfig.from_dict(raw.get("planner", {}))
        remote_url = raw.get("remote_base_url", "")
        credential_env = raw.get("credential_env", credential_env)
    if backend == "remote":
        if not remote_url:
            raise ValueError("remote backend needs remote_base_url in --config")
        provider = remote_handle(remote_url, credential_env=credential_env)
    else:
        provider = offline_handle()
    return InquiryEngine(provider=provider, config=planner)


def _context_for(text: str, attempt: str, target: str) -> AttemptContext:
    match = re.search(rf"\b{re.escape(attempt)}\b", text)
    span = match.span() if match else (0, len(attempt))
    sentences = re.split(r"(?<=[.!?])\s+", text)
    sentence = next((s for s in sentences if attempt in s), text)
    return AttemptContext(
        attempt=attempt,
        target=target,
        sentence=sentence,
        document_excerpt=text if match else attempt,
        span=span if match else (0, len(attempt)),
    )


@click.group()
@click.version_option(package_name="spelltutor")
def main() -> None:
    """Inquiry-based spelling tutor: batch evaluation and HTTP service."""


@main.command("batch-evaluate")
@click.option("--corpus", type=click.Path(exists=True), default=str(DEFAULT_CORPUS), show_default="bundled corpus")
@click.option("--policy", default="always-correct", show_default=True, help="always-correct | always-wrong | scripted:<file>")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--backend", type=click.Choice(["offline", "remote"]), default="offline", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def batch_evaluate(corpus: str, policy: str, out_dir: str, backend: str, config_path: str | None) -> None:
    """Generate one tutoring transcript per marked misspelling in a corpus."""
    try:
        engine = _engine(backend, config_path)
        policy_factory = _make_policy(policy)
    except (OSError, json.JSONDecodeError, ValueError, click.BadParameter) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    failures: list[str] = []

    with open(corpus, encoding="utf-8") as fh:
        samples = [json.loads(line) for line in fh if line.strip()]

    for sample in samples:
        sample_id = sample.get("sample_id", "sample")
        errors = sample.get("errors", [])
        if not errors:
            click.echo(f"warning: {sample_id} has no marked misspelling, skipped", err=True)
            continue
        for i, error in enumerate(errors, 1):
            attempt, target = error["attempt"], error["target"]
            if attempt.strip().lower() == target.strip().lower():
                click.echo(f"warning: {sample_id} row {i} is not an error, skipped", err=True)
                continue
            context = _context_for(sample.get("text", ""), attempt, target)
            try:
                result = engine.run_inquiry(context)
                transcript = run_headless(result.plan, policy_factory(), engine.provider)
            except SpellTutorError as exc:
                failures.append(f"{sample_id}/{attempt}: {type(exc).__name__}: {exc}")
                continue
            name = f"{sample_id}_{i}_{attempt.replace(' ', '_')}.transcript.jsonl"
            (out / name).write_text(transcript.to_jsonl(), encoding="utf-8")
            rows.append(
                {
                    "sample_id": sample_id,
                    "attempt": attempt,
                    "target": target,
                    "interventions": transcript.meta["intervention_count"],
                    "templates": [s["template_id"] for s in transcript.interventions()],
                    "question_types": [s["question_type"] for s in transcript.interventions()],
                    "transcript_file": name,
                }
            )

    if rows:
        write_summary(out, rows)
        render_figures(out, rows)
    counts = [r["interventions"] for r in rows]
    in_bounds = sum(1 for c in counts if 2 <= c <= 5)
    click.echo(
        f"transcripts: {len(rows)}  interventions in [2,5]: {in_bounds}/{len(rows)}  "
        f"failures: {len(failures)}"
    )
    for failure in failures:
        click.echo(f"  {failure}", err=True)
    if failures:
        sys.exit(EXIT_PIPELINE_FAILURE)
    sys.exit(EXIT_OK)


@main.command("check")
@click.argument("text")
@click.option("--backend", type=click.Choice(["offline", "remote"]), default="offline", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def check(text: str, backend: str, config_path: str | None) -> None:
    """Scan a piece of text and print the detection report."""
    try:
        engine = _engine(backend, config_path)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    try:
        report = engine.check(text)
    except SpellTutorError as exc:
        click.echo(f"pipeline failure: {exc}", err=True)
        sys.exit(EXIT_PIPELINE_FAILURE)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False))


@main.command("serve")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(host: str | None, port: int | None, config_path: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    try:
        config = ServiceConfig.load(config_path) if config_path else ServiceConfig()
        if host:
            config.host = host
        if port:
            config.port = port
    except (OSError, json.JSONDecodeError, ValueError, FileNotFoundError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
