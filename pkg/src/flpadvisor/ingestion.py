"""Corpus ingestion: CSV parsing, name canonicalization, clustering, graph load.

The corpus is a CSV of solved problem instances, one problem-solution pair
per row. Parsing is tolerant of header formatting but strict about values:
malformed rows are reported and skipped without aborting the batch.
Loading is merge-based and idempotent, so the same rows can arrive via a
bulk file or one-at-a-time feedback and produce the same graph.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from . import graph_store as gs
from .config import FamilyTable, ScaleThresholds
from .errors import HeaderMismatch
from .graph_store import GraphNode, GraphStore

CANONICAL_COLUMNS = (
    "problem_id",
    "num_facilities",
    "floor_w",
    "floor_h",
    "problem_representation",
    "facility_dimension_data",
    "objective",
    "constraints",
    "constraint_handling",
    "method",
    "model_parameters",
    "cost",
    "time_sec",
    "source",
)

SINGLE_OBJECTIVE = "single-objective"
MULTI_OBJECTIVE = "multi-objective"


# ---------------------------------------------------------------------------
# Row types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusRow:
    """One validated corpus row, fields still in source form."""

    problem_id: str
    num_facilities: int
    floor_w: float
    floor_h: float
    problem_representation: str
    facility_dimension_data: str
    objective: str
    constraints: str
    constraint_handling: str
    method: str
    model_parameters: str
    cost: float
    time_sec: float
    source: str


@dataclass(frozen=True)
class RowError:
    row: int
    reason: str


@dataclass(frozen=True)
class CanonicalNames:
    """Result of canonicalizing a raw comma-separated name list."""

    joined: str
    names: tuple[str, ...]


@dataclass(frozen=True)
class ProblemInstance:
    """Normalized problem-side view of a corpus row."""

    problem_id: str
    num_facilities: int
    floor_width: float
    floor_height: float
    representation: str
    facility_dimension_data: str
    objectives: tuple[str, ...]
    constraints: tuple[str, ...]
    constraint_handling: str
    description_text: str = ""
    embedding: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SolutionRecord:
    """Normalized solution-side view of a corpus row."""

    solution_id: str
    problem_id: str
    method: str
    method_display: str
    model_parameters: tuple[tuple[str, str | None], ...]
    cost: float
    time_sec: float
    source: str

    @property
    def parameters_text(self) -> str:
        return render_model_parameters(self.model_parameters)


@dataclass(frozen=True)
class ClusterAssignment:
    scale_cluster: str
    objective_cluster: str
    method_cluster: str
    constraint_handling_cluster: str


@dataclass
class LoadReport:
    problems_created: int = 0
    solutions_created: int = 0
    entities_linked: int = 0
    errors: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Canonicalization
# ---------------------------------------------------------------------------


def canonical_name(raw: str) -> str:
    """Lower-case, trim, and collapse internal whitespace."""
    return re.sub(r"\s+", " ", raw.strip().lower())


def canonicalize_name_list(raw: str) -> CanonicalNames:
    """Canonicalize a comma-separated name list.

    Split on commas, trim, lower-case, collapse whitespace, drop empties and
    exact duplicates, sort lexicographically, join with ", ". The same set of
    names yields the same canonical string regardless of input order.
    """
    names = sorted({canonical_name(part) for part in raw.split(",")} - {""})
    return CanonicalNames(joined=", ".join(names), names=tuple(names))


def parse_model_parameters(raw: str) -> tuple[tuple[str, str | None], ...]:
    """Split "key=value;key=value" into ordered pairs, values kept as strings."""
    pairs: list[tuple[str, str | None]] = []
    for segment in raw.split(";"):
        segment = segment.strip()
        if not segment:
            continue
        if "=" in segment:
            key, value = segment.split("=", 1)
            pairs.append((key.strip(), value.strip()))
        else:
            pairs.append((segment, None))
    return tuple(pairs)


def render_model_parameters(pairs: Iterable[tuple[str, str | None]]) -> str:
    return ";".join(k if v is None else f"{k}={v}" for k, v in pairs)


# ---------------------------------------------------------------------------
# CSV parsing
# ---------------------------------------------------------------------------


def _normalize_header(name: str) -> str:
    name = re.sub(r"\(.*?\)", "", name)  # "source(reference)" -> "source"
    name = re.sub(r"[^0-9a-zA-Z]+", "_", name.strip().lower())
    return name.strip("_")


def _positive_int(raw: str) -> int:
    value = int(raw.strip())
    if value < 1:
        raise ValueError("must be >= 1")
    return value


def _positive_real(raw: str) -> float:
    value = float(raw.strip())
    if value <= 0:
        raise ValueError("must be > 0")
    return value


def _nonnegative_real(raw: str) -> float:
    value = float(raw.strip())
    if value < 0:
        raise ValueError("must be >= 0")
    return value


def _required_text(raw: str) -> str:
    value = raw.strip()
    if not value:
        raise ValueError("must be non-empty")
    return value


_FIELD_PARSERS: dict[str, Any] = {
    "problem_id": _required_text,
    "num_facilities": _positive_int,
    "floor_w": _positive_real,
    "floor_h": _positive_real,
    "problem_representation": lambda s: s.strip(),
    "facility_dimension_data": lambda s: s.strip(),
    "objective": lambda s: s.strip(),
    "constraints": lambda s: s.strip(),
    "constraint_handling": lambda s: s.strip(),
    "method": _required_text,
    "model_parameters": lambda s: s.strip(),
    "cost": _nonnegative_real,
    "time_sec": _nonnegative_real,
    "source": lambda s: s.strip(),
}


def row_from_mapping(values: Mapping[str, Any]) -> tuple[CorpusRow | None, dict[str, str]]:
    """Validate one record; returns (row, {}) or (None, field->message).

    All field errors are collected in one pass, not first-failure. Values may
    arrive as strings (CSV) or native numbers (JSON feedback).
    """
    parsed: dict[str, Any] = {}
    errors: dict[str, str] = {}
    for column in CANONICAL_COLUMNS:
        raw = values.get(column)
        if raw is None:
            errors[column] = "missing"
            continue
        try:
            parsed[column] = _FIELD_PARSERS[column](str(raw))
        except ValueError as exc:
            message = str(exc)
            if "could not convert" in message or "invalid literal" in message:
                message = f"not a valid number: {raw!r}"
            errors[column] = message
    if errors:
        return None, errors
    return CorpusRow(**parsed), {}


def parse_corpus(data: bytes | str) -> tuple[list[CorpusRow], list[RowError]]:
    """Parse a UTF-8 corpus CSV with a header row.

    Header names are matched case-insensitively after snake_casing; extra
    columns are ignored. Malformed rows become RowError entries and are
    skipped; a missing required column aborts with HeaderMismatch.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    try:
        raw_header = next(reader)
    except StopIteration:
        raise HeaderMismatch(list(CANONICAL_COLUMNS))
    positions: dict[str, int] = {}
    for index, name in enumerate(raw_header):
        normalized = _normalize_header(name)
        if normalized in CANONICAL_COLUMNS and normalized not in positions:
            positions[normalized] = index
    missing = [c for c in CANONICAL_COLUMNS if c not in positions]
    if missing:
        raise HeaderMismatch(missing)

    rows: list[CorpusRow] = []
    errors: list[RowError] = []
    for cells in reader:
        line = reader.line_num
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) < max(positions.values()) + 1:
            errors.append(RowError(line, f"expected at least {max(positions.values()) + 1} columns, got {len(cells)}"))
            continue
        mapping = {column: cells[positions[column]] for column in CANONICAL_COLUMNS}
        row, field_errors = row_from_mapping(mapping)
        if row is None:
            reason = "; ".join(f"{k}: {v}" for k, v in sorted(field_errors.items()))
            errors.append(RowError(line, reason))
        else:
            rows.append(row)
    return rows, errors


# ---------------------------------------------------------------------------
# Normalization and clustering
# ---------------------------------------------------------------------------


def normalize_row(row: CorpusRow) -> tuple[ProblemInstance, SolutionRecord]:
    """Canonicalize a corpus row into its problem and solution views.

    The solution_id carries a placeholder sequence of 0; the loader assigns
    the real sequence against the live store.
    """
    objectives = canonicalize_name_list(row.objective)
    constraints = canonicalize_name_list(row.constraints)
    method_display = re.sub(r"\s+", " ", row.method.strip())
    problem = ProblemInstance(
        problem_id=row.problem_id,
        num_facilities=row.num_facilities,
        floor_width=row.floor_w,
        floor_height=row.floor_h,
        representation=canonical_name(row.problem_representation),
        facility_dimension_data=canonical_name(row.facility_dimension_data),
        objectives=objectives.names,
        constraints=constraints.names,
        constraint_handling=canonical_name(row.constraint_handling),
    )
    solution = SolutionRecord(
        solution_id=f"{row.problem_id}::{canonical_name(row.method)}::0",
        problem_id=row.problem_id,
        method=canonical_name(row.method),
        method_display=method_display,
        model_parameters=parse_model_parameters(row.model_parameters),
        cost=row.cost,
        time_sec=row.time_sec,
        source=row.source,
    )
    return problem, solution


def problem_instance_from_node(node: GraphNode) -> ProblemInstance:
    """Rebuild the normalized problem view from a stored Problem node."""
    props = node.properties
    embedding = props.get("embedding")
    return ProblemInstance(
        problem_id=node.key,
        num_facilities=props["num_facilities"],
        floor_width=props.get("floor_w", 0.0),
        floor_height=props.get("floor_h", 0.0),
        representation=props.get("representation", ""),
        facility_dimension_data=props.get("facility_dimension_data", ""),
        objectives=canonicalize_name_list(props.get("objectives", "")).names,
        constraints=canonicalize_name_list(props.get("constraints", "")).names,
        constraint_handling=props.get("constraint_handling", ""),
        description_text=props.get("description_text", ""),
        embedding=tuple(embedding) if embedding is not None else None,
    )


def assign_clusters(
    problem: ProblemInstance,
    method: str = "",
    *,
    thresholds: ScaleThresholds,
    families: FamilyTable,
) -> ClusterAssignment:
    """Deterministic cluster assignment for one problem-solution pair.

    Scale comes from the threshold table; objective arity from the comma
    rule on the canonical joined objective string; method and
    constraint-handling families from the configured lookup table.
    """
    joined = ", ".join(problem.objectives)
    objective_cluster = MULTI_OBJECTIVE if "," in joined else SINGLE_OBJECTIVE
    return ClusterAssignment(
        scale_cluster=thresholds.label(problem.num_facilities),
        objective_cluster=objective_cluster,
        method_cluster=families.method_family(canonical_name(method)),
        constraint_handling_cluster=families.handling_family(problem.constraint_handling),
    )


# ---------------------------------------------------------------------------
# Graph loading
# ---------------------------------------------------------------------------


def _solution_sequence(store: GraphStore, solution: SolutionRecord) -> tuple[str, bool]:
    """Pick the solution node key for this record.

    A record denotes the same solve as an existing node when problem, method,
    parameters, and source all match; its cost/time then merge onto that node
    (last-write-wins). Otherwise the next free sequence number is used.
    """
    prefix = f"{solution.problem_id}::{solution.method}::"
    params_text = solution.parameters_text
    max_seq = 0
    for node in store.nodes_by_label(gs.SOLUTION):
        if not node.key.startswith(prefix):
            continue
        seq = int(node.key[len(prefix):])
        max_seq = max(max_seq, seq)
        if (
            node.properties.get("model_parameters") == params_text
            and node.properties.get("source") == solution.source
        ):
            return node.key, True
    return f"{prefix}{max_seq + 1}", False


def load_corpus(
    rows: Iterable[CorpusRow],
    store: GraphStore,
    *,
    thresholds: ScaleThresholds,
    families: FamilyTable,
) -> LoadReport:
    """Merge corpus rows into the store as one atomic batch.

    Per row: upsert the problem and its catalog nodes, the solution, every
    relationship, and the cluster nodes/edges. Loading the same rows again
    changes nothing.
    """
    report = LoadReport()
    with store.batch():
        for row in rows:
            problem, solution = normalize_row(row)
            _load_one(store, problem, solution, row.method, thresholds, families, report)
    return report


def _upsert_catalog(store: GraphStore, label: str, name: str, display: str | None = None) -> GraphNode:
    props = {"name": display} if display is not None and not store.has_node(label, name) else {}
    return store.upsert_node(label, name, props)


def _load_one(
    store: GraphStore,
    problem: ProblemInstance,
    solution: SolutionRecord,
    method_raw: str,
    thresholds: ScaleThresholds,
    families: FamilyTable,
    report: LoadReport,
) -> None:
    """Load one normalized pair, updating the report in place."""
    links = 0
    problem_existed = store.has_node(gs.PROBLEM, problem.problem_id)
    problem_node = store.upsert_node(
        gs.PROBLEM,
        problem.problem_id,
        {
            "num_facilities": problem.num_facilities,
            "floor_w": problem.floor_width,
            "floor_h": problem.floor_height,
            "representation": problem.representation,
            "facility_dimension_data": problem.facility_dimension_data,
            "objectives": ", ".join(problem.objectives),
            "constraints": ", ".join(problem.constraints),
            "constraint_handling": problem.constraint_handling,
        },
    )
    if not problem_existed:
        report.problems_created += 1

    objective_nodes = [_upsert_catalog(store, gs.OBJECTIVE, n) for n in problem.objectives]
    constraint_nodes = [_upsert_catalog(store, gs.CONSTRAINT, n) for n in problem.constraints]
    links += store.sync_out_edges(problem_node, gs.HAS_OBJECTIVE, objective_nodes)[0]
    links += store.sync_out_edges(problem_node, gs.HAS_CONSTRAINT, constraint_nodes)[0]

    representation_nodes = []
    if problem.representation:
        representation_nodes.append(_upsert_catalog(store, gs.REPRESENTATION, problem.representation))
    links += store.sync_out_edges(problem_node, gs.HAS_REPRESENTATION, representation_nodes)[0]

    handling_nodes = []
    if problem.constraint_handling:
        handling_nodes.append(_upsert_catalog(store, gs.CONSTRAINT_HANDLING, problem.constraint_handling))
    links += store.sync_out_edges(problem_node, gs.CONS_HANDLING, handling_nodes)[0]

    method_node = _upsert_catalog(store, gs.METHOD, solution.method, solution.method_display)

    clusters = assign_clusters(problem, method_raw, thresholds=thresholds, families=families)
    scale_node = store.upsert_node(gs.SCALE_CLUSTER_LABEL, clusters.scale_cluster)
    objective_cluster_node = store.upsert_node(gs.OBJECTIVE_CLUSTER_LABEL, clusters.objective_cluster)
    links += store.sync_out_edges(problem_node, gs.BELONGS_TO_SCALE, [scale_node])[0]
    links += store.sync_out_edges(problem_node, gs.OBJECTIVE_CLUSTER, [objective_cluster_node])[0]

    method_cluster_node = store.upsert_node(gs.METHOD_CLUSTER_LABEL, clusters.method_cluster)
    store.upsert_edge(method_node, gs.IS_TYPE_OF, method_cluster_node)
    if handling_nodes:
        handling_cluster_node = store.upsert_node(
            gs.CONSTRAINT_HANDLING_CLUSTER_LABEL, clusters.constraint_handling_cluster
        )
        store.upsert_edge(handling_nodes[0], gs.IS_TYPE_OF, handling_cluster_node)

    solution_key, existed = _solution_sequence(store, solution)
    solution_node = store.upsert_node(
        gs.SOLUTION,
        solution_key,
        {
            "problem_id": solution.problem_id,
            "method": solution.method,
            "model_parameters": solution.parameters_text,
            "cost": solution.cost,
            "time_sec": solution.time_sec,
            "source": solution.source,
        },
    )
    if not existed:
        report.solutions_created += 1
    store.upsert_edge(solution_node, gs.SOLVED, problem_node)
    store.upsert_edge(solution_node, gs.USED_METHOD, method_node)
    report.entities_linked += links
