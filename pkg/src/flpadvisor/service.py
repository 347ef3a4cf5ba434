"""HTTP service exposing recommendation, feedback, catalogs, and statistics.

All failures use one envelope: {"error": {"code", "message", "details"}}.
Recommendation requests share read access to the store; feedback requests
serialize as exclusive writes through the store's writer lock.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import graph_store as gs
from .config import FamilyTable, ServiceConfig
from .embedding import EmbeddingIndex
from .errors import (
    EmptyEvidence,
    EmptyStore,
    FlpAdvisorError,
    MalformedResponse,
    ProviderError,
    UnknownEntity,
    ValidationError,
)
from .feedback import ingest_feedback
from .graph_store import GraphStore
from .providers import (
    EvidenceSummaryLlmProvider,
    HashedBagOfWordsEmbedding,
    RemoteEmbeddingProvider,
    RemoteLlmProvider,
)
from .recommender import Recommendation, Recommender
from .retrieval import EvidenceDossier, Retriever


@dataclass
class ServiceContext:
    """Everything a running service needs, wired once at boot."""

    config: ServiceConfig
    store: GraphStore
    families: FamilyTable
    index: EmbeddingIndex
    retriever: Retriever
    recommender: Recommender


def build_context(config: ServiceConfig, store: GraphStore | None = None) -> ServiceContext:
    """Wire providers, retriever, and recommender from configuration."""
    config.validate()
    if store is None:
        if config.store_path is None:
            raise ValueError("a store or a store_path is required")
        store = GraphStore.snapshot_load(config.store_path)
    if config.provider_mode == "remote":
        embedder = RemoteEmbeddingProvider(config.embed_endpoint, config.embed_key)
        llm = RemoteLlmProvider(config.llm_endpoint, config.llm_key)
    else:
        embedder = HashedBagOfWordsEmbedding()
        llm = EvidenceSummaryLlmProvider()
    index = EmbeddingIndex(store, embedder)
    retriever = Retriever(
        store,
        index=index,
        thresholds=config.thresholds,
        graph_limit=config.graph_limit,
        vector_k=config.vector_k,
    )
    recommender = Recommender(retriever, llm)
    try:
        store.stats()  # preload the boot-time statistics cache
    except EmptyStore:
        pass
    return ServiceContext(
        config=config,
        store=store,
        families=config.family_table(),
        index=index,
        retriever=retriever,
        recommender=recommender,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def apply_feedback(ctx: ServiceContext, record: Any):
    """Ingest one feedback record, honoring the pending-snapshot flag.

    With ``feedback_pending_path`` configured, the record lands in a
    reviewable snapshot (seeded from the live store on first use) and the
    live store is untouched; otherwise it merges straight into the live
    store and is embedded immediately.
    """
    pending_path = ctx.config.feedback_pending_path
    if pending_path is None:
        return ingest_feedback(
            record,
            ctx.store,
            index=ctx.index,
            thresholds=ctx.config.thresholds,
            families=ctx.families,
        )
    if not pending_path.exists():
        ctx.store.snapshot_save(pending_path)
    pending = GraphStore.snapshot_load(pending_path)
    report = ingest_feedback(
        record, pending, thresholds=ctx.config.thresholds, families=ctx.families
    )
    pending.snapshot_save(pending_path)
    return dataclasses.replace(
        report,
        warnings=report.warnings + (f"routed to pending snapshot {pending_path}",),
    )


def _recommendation_payload(recommendation: Recommendation, dossier: EvidenceDossier) -> dict[str, Any]:
    return {
        "recommendation": {
            "methods": list(recommendation.methods),
            "parameters": dict(recommendation.parameters),
            "representation": recommendation.representation,
            "constraint_handling": recommendation.constraint_handling,
            "grounded": recommendation.grounded,
            "cited_problem_ids": list(recommendation.cited_problem_ids),
        },
        "reasoning": recommendation.reasoning,
        "evidence": {
            "graph_rows": [
                {
                    "problem_id": row.problem_id,
                    "num_facilities": row.num_facilities,
                    "objective_names": list(row.objective_names),
                    "constraint_names": list(row.constraint_names),
                    "representation": row.representation,
                    "constraint_handling": row.constraint_handling,
                    "method": row.method,
                    "model_parameters": row.model_parameters,
                    "cost": row.cost,
                    "time_sec": row.time_sec,
                    "source": row.source,
                    "objective_score": row.objective_score,
                    "constraint_score": row.constraint_score,
                    "facility_distance": row.facility_distance,
                }
                for row in dossier.graph_rows
            ],
            "used_fallback": dossier.used_fallback,
            "vector_matches": [
                {
                    "problem_id": match.problem_id,
                    "similarity": match.similarity,
                    "description_text": match.description_text,
                    "methods": list(dossier.vector_methods.get(match.problem_id, ())),
                }
                for match in dossier.vector_matches
            ],
            "trends": [
                {
                    "cluster_kind": trend.cluster_kind,
                    "cluster_label": trend.cluster_label,
                    "entries": [
                        {"method": e.method, "count": e.count, "mean_cost": e.mean_cost}
                        for e in trend.entries
                    ],
                }
                for trend in dossier.trends
            ],
        },
        "warnings": list(dossier.warnings) + list(recommendation.warnings),
    }


class _ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: Any = None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details


_ERROR_STATUS: list[tuple[type, int]] = [
    (UnknownEntity, 422),
    (ValidationError, 422),
    (ProviderError, 503),
    (MalformedResponse, 502),
    (EmptyEvidence, 409),
    (EmptyStore, 409),
]


def _to_api_error(exc: Exception) -> _ApiError:
    details: Any = None
    if isinstance(exc, UnknownEntity):
        details = {"kind": exc.kind, "name": exc.name, "suggestions": exc.suggestions}
    elif isinstance(exc, ValidationError):
        details = exc.field_errors
    for exc_type, status in _ERROR_STATUS:
        if isinstance(exc, exc_type):
            return _ApiError(status, type(exc).__name__, str(exc), details)
    return _ApiError(500, type(exc).__name__, str(exc), None)


def _envelope(error: _ApiError) -> JSONResponse:
    return JSONResponse(
        status_code=error.status,
        content={"error": {"code": error.code, "message": error.message, "details": error.details}},
    )


def _expect_list_of_strings(body: dict, key: str) -> list[str]:
    value = body.get(key) or []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise _ApiError(422, "ValidationError", f"{key} must be a list of strings", {key: "bad type"})
    return value


def create_app(ctx: ServiceContext, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="flpadvisor", version="0.1.0")

    @app.exception_handler(_ApiError)
    async def handle_api_error(request: Request, exc: _ApiError):
        return _envelope(exc)

    @app.exception_handler(FlpAdvisorError)
    async def handle_domain_error(request: Request, exc: FlpAdvisorError):
        return _envelope(_to_api_error(exc))

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/entities")
    def entities() -> dict:
        store = ctx.store
        with store.read_view():
            return {
                "objectives": [n.key for n in store.nodes_by_label(gs.OBJECTIVE)],
                "constraints": [n.key for n in store.nodes_by_label(gs.CONSTRAINT)],
                "representations": [n.key for n in store.nodes_by_label(gs.REPRESENTATION)],
                "methods": [
                    n.properties.get("name", n.key) for n in store.nodes_by_label(gs.METHOD)
                ],
                "constraint_handlings": [
                    n.key for n in store.nodes_by_label(gs.CONSTRAINT_HANDLING)
                ],
            }

    @app.get("/api/stats")
    def stats() -> dict:
        s = ctx.store.stats()
        return {
            "node_count_by_label": s.node_count_by_label,
            "edge_count_by_type": s.edge_count_by_type,
            "max_num_facilities": s.max_num_facilities,
            "facility_top_quartile": s.facility_top_quartile,
        }

    @app.post("/api/recommend")
    async def recommend(request: Request) -> dict:
        body = await request.json()
        if not isinstance(body, dict):
            raise _ApiError(422, "ValidationError", "body must be a JSON object", None)
        num_facilities = body.get("num_facilities")
        if num_facilities is not None and not isinstance(num_facilities, int):
            raise _ApiError(
                422, "ValidationError", "num_facilities must be an integer",
                {"num_facilities": "bad type"},
            )
        try:
            query = ctx.retriever.normalize_query(
                num_facilities=num_facilities,
                objectives=_expect_list_of_strings(body, "objectives"),
                constraints=_expect_list_of_strings(body, "constraints"),
                representation=body.get("representation"),
                free_text=body.get("free_text"),
            )
        except ValueError as exc:
            raise _ApiError(422, "ValidationError", str(exc), None)
        recommendation, dossier = ctx.recommender.recommend(query)
        return _recommendation_payload(recommendation, dossier)

    @app.post("/api/feedback")
    async def feedback(request: Request) -> dict:
        body = await request.json()
        if not isinstance(body, dict):
            raise _ApiError(422, "ValidationError", "body must be a JSON object", None)
        report = apply_feedback(ctx, body)
        return {
            "problem_id": report.problem_id,
            "created_nodes": report.created_nodes,
            "linked_existing": report.linked_existing,
            "reclustered": report.reclustered,
            "embedded": report.embedded,
            "warnings": list(report.warnings),
        }

    if ui_dir is not None:
        from starlette.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
