"""Continuous learning: merge user-submitted solved instances into the graph.

A feedback record has exactly the corpus-row shape. Ingesting one reuses the
same canonicalization and merge machinery as bulk CSV loading, so loading a
batch as a file and submitting it record-by-record produce identical stores.
Each record is applied atomically: re-clustering of the touched problem,
embedding of new problems, and statistics refresh all happen inside one
writer batch, and an identical resubmission is a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from . import graph_store as gs
from .config import FamilyTable, ScaleThresholds
from .embedding import EmbeddingIndex
from .errors import ProviderError, ValidationError, ZeroVector
from .graph_store import GraphStore
from .ingestion import (
    CorpusRow,
    LoadReport,
    _load_one,
    assign_clusters,
    normalize_row,
    row_from_mapping,
)


@dataclass(frozen=True)
class FeedbackReport:
    problem_id: str
    created_nodes: int
    linked_existing: int
    reclustered: bool
    embedded: bool
    warnings: tuple[str, ...] = ()


def validate_feedback(record: Mapping[str, Any]) -> CorpusRow:
    """Validate and normalize one feedback record.

    All field problems are reported together in a single ValidationError,
    not first-failure.
    """
    row, errors = row_from_mapping(record)
    if row is None:
        raise ValidationError(errors)
    return row


def _referenced_nodes(
    row: CorpusRow, *, thresholds: ScaleThresholds, families: FamilyTable
) -> list[tuple[str, str]]:
    """Every non-solution node this record will touch."""
    problem, solution = normalize_row(row)
    clusters = assign_clusters(problem, row.method, thresholds=thresholds, families=families)
    refs: list[tuple[str, str]] = [(gs.PROBLEM, problem.problem_id), (gs.METHOD, solution.method)]
    refs += [(gs.OBJECTIVE, name) for name in problem.objectives]
    refs += [(gs.CONSTRAINT, name) for name in problem.constraints]
    if problem.representation:
        refs.append((gs.REPRESENTATION, problem.representation))
    if problem.constraint_handling:
        refs.append((gs.CONSTRAINT_HANDLING, problem.constraint_handling))
        refs.append((gs.CONSTRAINT_HANDLING_CLUSTER_LABEL, clusters.constraint_handling_cluster))
    refs.append((gs.SCALE_CLUSTER_LABEL, clusters.scale_cluster))
    refs.append((gs.OBJECTIVE_CLUSTER_LABEL, clusters.objective_cluster))
    refs.append((gs.METHOD_CLUSTER_LABEL, clusters.method_cluster))
    return refs


def ingest_feedback(
    record: Mapping[str, Any] | CorpusRow,
    store: GraphStore,
    *,
    index: EmbeddingIndex | None = None,
    thresholds: ScaleThresholds,
    families: FamilyTable,
) -> FeedbackReport:
    """Merge one solved instance into the knowledge base.

    Existing entities are linked rather than duplicated; the touched
    problem's cluster assignment is recomputed; a brand-new problem is
    embedded; statistics refresh with the batch. Readers see either the old
    graph or the fully updated one. An embedding provider outage downgrades
    to a warning: the graph update stands and the problem stays retryable.
    """
    row = record if isinstance(record, CorpusRow) else validate_feedback(record)
    problem, solution = normalize_row(row)
    warnings: list[str] = []
    embedded = False
    with store.batch():
        linked_existing = sum(
            1
            for ref in _referenced_nodes(row, thresholds=thresholds, families=families)
            if store.has_node(*ref)
        )
        nodes_before = store.node_count()
        report = LoadReport()
        _load_one(store, problem, solution, row.method, thresholds, families, report)
        created = store.node_count() - nodes_before
        if index is not None:
            try:
                embedded = index.index_problem(problem.problem_id)
            except (ProviderError, ZeroVector) as exc:
                warnings.append(f"embedding deferred: {exc}")
    return FeedbackReport(
        problem_id=problem.problem_id,
        created_nodes=created,
        linked_existing=linked_existing,
        reclustered=True,
        embedded=embedded,
        warnings=tuple(warnings),
    )
