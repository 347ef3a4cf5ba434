"""Command-line interface: ingest, serve, recommend, eval, stats, feedback.

Exit codes: 0 success, 2 validation failures (bad input, unknown entities,
header mismatches), 3 provider failures, 1 anything else.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from .config import resolve_config
from .errors import (
    FlpAdvisorError,
    HeaderMismatch,
    ProviderError,
    UnknownEntity,
    ValidationError,
)
from .evaluation import (
    BASELINE_MODE,
    KGRAG_MODE,
    EvalReport,
    SuiteRunner,
    load_cases,
    write_report,
)
from .graph_store import GraphStore
from .ingestion import load_corpus, parse_corpus
from .recommender import Recommendation
from .retrieval import EvidenceDossier
from .service import apply_feedback, build_context, create_app

EXIT_VALIDATION = 2
EXIT_PROVIDER = 3

_VALIDATION_ERRORS = (UnknownEntity, ValidationError, HeaderMismatch, ValueError)


def _fail(exc: Exception) -> "None":
    if isinstance(exc, _VALIDATION_ERRORS):
        code = EXIT_VALIDATION
    elif isinstance(exc, ProviderError):
        code = EXIT_PROVIDER
    else:
        code = 1
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _config(db: str | None, providers: str | None, config_file: str | None):
    flags = {"store_path": db, "provider_mode": providers}
    return resolve_config(flags=flags, config_file=Path(config_file) if config_file else None)


common_options = [
    click.option("--db", required=True, type=click.Path(), help="Store snapshot path."),
    click.option("--providers", type=click.Choice(["mock", "remote"]), default=None,
                 help="Provider mode (default: mock, or FLPADV_PROVIDERS)."),
    click.option("--config", "config_file", type=click.Path(exists=True), default=None,
                 help="JSON config file (overrides flags and environment)."),
]


def with_common_options(fn):
    for option in reversed(common_options):
        fn = option(fn)
    return fn


@click.group()
def main() -> None:
    """Evidence-grounded algorithm recommendation for facility layout problems."""


@main.command()
@click.argument("corpus", type=click.Path(exists=True))
@with_common_options
def ingest(corpus: str, db: str, providers: str | None, config_file: str | None) -> None:
    """Load a corpus CSV into the store and embed every problem."""
    try:
        config = _config(db, providers, config_file)
        store = (
            GraphStore.snapshot_load(config.store_path)
            if Path(config.store_path).exists()
            else GraphStore()
        )
        rows, row_errors = parse_corpus(Path(corpus).read_bytes())
        report = load_corpus(rows, store, thresholds=config.thresholds, families=config.family_table())
        ctx = build_context(config, store=store)
        embedded = ctx.index.index_all()
        store.snapshot_save(config.store_path)
    except Exception as exc:  # noqa: BLE001 - single funnel to exit codes
        _fail(exc)
        return
    click.echo(
        f"problems_created={report.problems_created} solutions_created={report.solutions_created} "
        f"entities_linked={report.entities_linked} embedded={embedded} row_errors={len(row_errors)}"
    )
    for error in row_errors:
        click.echo(f"  row {error.row}: {error.reason}", err=True)


@main.command()
@click.option("--port", type=int, default=None, help="HTTP port (default 8080).")
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Serve a built web UI directory at / (same origin as the API).")
@with_common_options
def serve(port: int | None, ui_dir: str | None, db: str, providers: str | None, config_file: str | None) -> None:
    """Run the HTTP API."""
    import socket

    import uvicorn

    try:
        config = _config(db, providers, config_file)
        if port is not None:
            config.http_port = port
        ctx = build_context(config)
        app = create_app(ctx, ui_dir=Path(ui_dir) if ui_dir else None)
        with socket.socket() as probe:  # surface bind failures as plain I/O errors
            try:
                probe.bind(("127.0.0.1", config.http_port))
            except OSError as exc:
                raise OSError(f"cannot bind 127.0.0.1:{config.http_port}: {exc}") from exc
        uvicorn.run(app, host="127.0.0.1", port=config.http_port, log_level="warning")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


def _print_recommendation(recommendation: Recommendation, dossier: EvidenceDossier) -> None:
    click.echo("RECOMMENDATION")
    for i, method in enumerate(recommendation.methods, 1):
        params = recommendation.parameters.get(method)
        suffix = f"  [{params}]" if params else ""
        click.echo(f"  {i}. {method}{suffix}")
    if recommendation.representation:
        click.echo(f"  representation: {recommendation.representation}")
    if recommendation.constraint_handling:
        click.echo(f"  constraint handling: {recommendation.constraint_handling}")
    click.echo(f"  grounded: {recommendation.grounded}")
    click.echo("REASONING")
    click.echo(f"  {recommendation.reasoning}")
    click.echo("EVIDENCE")
    if dossier.used_fallback:
        click.echo("  (fallback: large-scale precedents beyond the known maximum)")
    header = f"  {'problem':10s} {'n':>4s} {'method':22s} {'obj':>3s} {'con':>3s} {'dist':>4s} {'cost':>12s} {'time':>9s}"
    click.echo(header)
    for row in dossier.graph_rows:
        click.echo(
            f"  {row.problem_id:10s} {row.num_facilities:4d} {row.method:22s} "
            f"{row.objective_score:3d} {row.constraint_score:3d} {row.facility_distance:4d} "
            f"{row.cost:12.3f} {row.time_sec:9.2f}"
        )
    for match in dossier.vector_matches:
        click.echo(f"  ~ {match.problem_id:10s} similarity={match.similarity:.4f}")
    for trend in dossier.trends:
        entries = ", ".join(f"{e.method} x{e.count} (mean cost {e.mean_cost:.1f})" for e in trend.entries)
        click.echo(f"  # {trend.cluster_kind} cluster '{trend.cluster_label}': {entries}")
    for warning in dossier.warnings + recommendation.warnings:
        click.echo(f"  ! {warning}", err=True)


@main.command()
@click.option("--facilities", type=int, default=None, help="Number of facilities.")
@click.option("--objective", "objectives", multiple=True, help="Objective name (repeatable).")
@click.option("--constraint", "constraints", multiple=True, help="Constraint name (repeatable).")
@click.option("--representation", default=None, help="Problem representation name.")
@click.option("--free-text", default=None, help="Unvalidated problem description.")
@with_common_options
def recommend(
    facilities: int | None,
    objectives: tuple[str, ...],
    constraints: tuple[str, ...],
    representation: str | None,
    free_text: str | None,
    db: str,
    providers: str | None,
    config_file: str | None,
) -> None:
    """Print a recommendation with reasoning and the evidence behind it."""
    try:
        config = _config(db, providers, config_file)
        ctx = build_context(config)
        query = ctx.retriever.normalize_query(
            num_facilities=facilities,
            objectives=list(objectives),
            constraints=list(constraints),
            representation=representation,
            free_text=free_text,
        )
        recommendation, dossier = ctx.recommender.recommend(query)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
        return
    _print_recommendation(recommendation, dossier)


def _print_report(report: EvalReport) -> None:
    click.echo(f"mode: {report.mode}")
    click.echo(f"  {'case':12s} {'accuracy':>8s} {'reasoning':>9s} {'grounded':>8s}  methods")
    for case in report.cases:
        score = "-" if case.reasoning_score is None else str(case.reasoning_score)
        note = f"  [{case.error}]" if case.error else ""
        click.echo(
            f"  {case.case_id:12s} {case.accuracy_bit:8d} {score:>9s} {str(case.grounded):>8s}"
            f"  {', '.join(case.methods) or '-'}{note}"
        )
    mean = "-" if report.mean_reasoning is None else f"{report.mean_reasoning:.2f}"
    click.echo(f"  accuracy: {report.accuracy_fraction:.0%}   mean reasoning: {mean}")


@main.command(name="eval")
@click.option("--cases", "cases_file", required=True, type=click.Path(exists=True),
              help="JSON list of test cases.")
@click.option("--judge", type=click.Choice(["mock", "remote"]), default="mock",
              help="Reasoning-quality judge provider.")
@click.option("--baseline", "baseline_csv", type=click.Path(exists=True), default=None,
              help="Also run the raw-CSV-in-context baseline with this corpus.")
@with_common_options
def eval_command(
    cases_file: str,
    judge: str,
    baseline_csv: str | None,
    db: str,
    providers: str | None,
    config_file: str | None,
) -> None:
    """Run the evaluation suite and write JSON reports next to the cases file."""
    from .providers import RemoteLlmProvider, StaticLlmProvider

    try:
        config = _config(db, providers, config_file)
        ctx = build_context(config)
        if judge == "remote":
            if not config.llm_endpoint:
                raise ValueError("remote judge requires FLPADV_LLM_ENDPOINT")
            judge_provider = RemoteLlmProvider(config.llm_endpoint, config.llm_key)
        else:
            judge_provider = StaticLlmProvider("5")
        cases = load_cases(cases_file)
        runner = SuiteRunner(recommender=ctx.recommender, judge=judge_provider)
        report = runner.run_suite(cases, KGRAG_MODE)
        outputs = [report]
        if baseline_csv is not None:
            baseline_runner = SuiteRunner(
                corpus_csv=Path(baseline_csv).read_text("utf-8"),
                baseline_llm=ctx.recommender.llm,
                judge=judge_provider,
            )
            outputs.append(baseline_runner.run_suite(cases, BASELINE_MODE))
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
        return
    for output in outputs:
        _print_report(output)
        path = write_report(output, cases_file)
        click.echo(f"  report written: {path}")


@main.command()
@with_common_options
def stats(db: str, providers: str | None, config_file: str | None) -> None:
    """Print knowledge-base statistics."""
    try:
        config = _config(db, providers, config_file)
        store = GraphStore.snapshot_load(config.store_path)
        s = store.stats()
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
        return
    click.echo(json.dumps(dataclasses.asdict(s), indent=2, sort_keys=True))


@main.command()
@click.argument("records", type=click.Path(exists=True))
@with_common_options
def feedback(records: str, db: str, providers: str | None, config_file: str | None) -> None:
    """Bulk feedback: ingest a CSV of solved records one by one."""
    try:
        config = _config(db, providers, config_file)
        ctx = build_context(config)
        rows, row_errors = parse_corpus(Path(records).read_bytes())
        reports = [apply_feedback(ctx, row) for row in rows]
        if config.feedback_pending_path is None:
            ctx.store.snapshot_save(config.store_path)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
        return
    created = sum(r.created_nodes for r in reports)
    embedded = sum(1 for r in reports if r.embedded)
    click.echo(f"records={len(reports)} created_nodes={created} embedded={embedded} row_errors={len(row_errors)}")
    for error in row_errors:
        click.echo(f"  row {error.row}: {error.reason}", err=True)


if __name__ == "__main__":
    main()
