"""Embedded typed property graph holding the layout-problem knowledge base.

Nodes carry one label from a closed set and a flat map of scalar properties
(strings, integers, reals, or real vectors). Edges are typed, directed, and
deduplicated per (source, type, target); endpoint labels are checked against
the relationship schema, so an illegal edge can never enter the store.

All mutation goes through merge-style upserts: re-applying a batch is a
no-op. Writers are exclusive and readers are shared (single-writer /
multi-reader); a mutation batch holds the write lock for its whole duration,
so a reader never observes a partially applied batch.

Persistence is a single line-delimited text snapshot written in canonical
order (nodes sorted by label and key, edges by type and endpoints), so two
stores with equal content serialize byte-identically.
"""

from __future__ import annotations

import json
import math
import os
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from .errors import EmptyStore, FormatError, SchemaViolation

# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

PROBLEM = "Problem"
METHOD = "Method"
OBJECTIVE = "Objective"
CONSTRAINT = "Constraint"
REPRESENTATION = "Representation"
CONSTRAINT_HANDLING = "ConstraintHandling"
SOLUTION = "Solution"
OBJECTIVE_CLUSTER_LABEL = "ObjectiveCluster"
SCALE_CLUSTER_LABEL = "ScaleCluster"
METHOD_CLUSTER_LABEL = "MethodCluster"
CONSTRAINT_HANDLING_CLUSTER_LABEL = "ConstraintHandlingCluster"

NODE_LABELS = frozenset(
    {
        PROBLEM,
        METHOD,
        OBJECTIVE,
        CONSTRAINT,
        REPRESENTATION,
        CONSTRAINT_HANDLING,
        SOLUTION,
        OBJECTIVE_CLUSTER_LABEL,
        SCALE_CLUSTER_LABEL,
        METHOD_CLUSTER_LABEL,
        CONSTRAINT_HANDLING_CLUSTER_LABEL,
    }
)

SOLVED = "SOLVED"
USED_METHOD = "USED_METHOD"
HAS_OBJECTIVE = "HAS_OBJECTIVE"
HAS_CONSTRAINT = "HAS_CONSTRAINT"
HAS_REPRESENTATION = "HAS_REPRESENTATION"
CONS_HANDLING = "CONS_HANDLING"
BELONGS_TO_SCALE = "BELONGS_TO_SCALE"
IS_TYPE_OF = "IS_TYPE_OF"
OBJECTIVE_CLUSTER = "OBJECTIVE_CLUSTER"

#: Legal (source label, target label) pairs per edge type.
EDGE_SCHEMA: dict[str, frozenset[tuple[str, str]]] = {
    SOLVED: frozenset({(SOLUTION, PROBLEM)}),
    USED_METHOD: frozenset({(SOLUTION, METHOD)}),
    HAS_OBJECTIVE: frozenset({(PROBLEM, OBJECTIVE)}),
    HAS_CONSTRAINT: frozenset({(PROBLEM, CONSTRAINT)}),
    HAS_REPRESENTATION: frozenset({(PROBLEM, REPRESENTATION)}),
    CONS_HANDLING: frozenset({(PROBLEM, CONSTRAINT_HANDLING)}),
    BELONGS_TO_SCALE: frozenset({(PROBLEM, SCALE_CLUSTER_LABEL)}),
    IS_TYPE_OF: frozenset(
        {
            (METHOD, METHOD_CLUSTER_LABEL),
            (CONSTRAINT_HANDLING, CONSTRAINT_HANDLING_CLUSTER_LABEL),
        }
    ),
    OBJECTIVE_CLUSTER: frozenset({(PROBLEM, OBJECTIVE_CLUSTER_LABEL)}),
}

EDGE_TYPES = frozenset(EDGE_SCHEMA)

NodeKey = tuple[str, str]  # (label, key)
EdgeKey = tuple[str, NodeKey, NodeKey]  # (type, from, to)

_SNAPSHOT_MAGIC = "flpadvisor-graph/v1"


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------


@dataclass
class GraphNode:
    """A labeled node; identity is (label, key), payload is ``properties``."""

    label: str
    key: str
    properties: dict[str, Any] = field(default_factory=dict)

    @property
    def ref(self) -> NodeKey:
        return (self.label, self.key)


@dataclass(frozen=True)
class KnowledgeBaseStats:
    """Aggregate statistics, kept consistent with the live store."""

    node_count_by_label: dict[str, int]
    edge_count_by_type: dict[str, int]
    max_num_facilities: int
    facility_top_quartile: int


@dataclass(frozen=True)
class ProblemPredicate:
    """Filter over problems: a facility-count range AND-ed with an OR over
    entity membership (matches at least one listed objective OR at least one
    listed constraint; with both lists empty the membership clause passes)."""

    min_facilities: float | None = None
    max_facilities: float | None = None
    any_objectives: tuple[str, ...] = ()
    any_constraints: tuple[str, ...] = ()

    def matches(self, num_facilities: int, objectives: set[str], constraints: set[str]) -> bool:
        if self.min_facilities is not None and num_facilities < self.min_facilities:
            return False
        if self.max_facilities is not None and num_facilities > self.max_facilities:
            return False
        if self.any_objectives or self.any_constraints:
            return bool(set(self.any_objectives) & objectives) or bool(
                set(self.any_constraints) & constraints
            )
        return True


@dataclass(frozen=True)
class ProblemMatch:
    """A matched problem bundled with its neighborhood."""

    problem: GraphNode
    objectives: tuple[str, ...]
    constraints: tuple[str, ...]
    representation: str | None
    constraint_handling: str | None
    scale_cluster: str | None
    objective_cluster: str | None
    solutions: tuple[GraphNode, ...]


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _validate_property(name: str, value: Any) -> None:
    if isinstance(value, str) or _is_real(value):
        return
    if isinstance(value, list) and all(_is_real(v) for v in value):
        return
    raise SchemaViolation(
        f"property {name!r} must be a string, number, or numeric vector, got {type(value).__name__}"
    )


def _validate_required(label: str, properties: dict[str, Any]) -> None:
    if label == PROBLEM:
        n = properties.get("num_facilities")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise SchemaViolation(f"Problem requires integer num_facilities >= 1, got {n!r}")
    elif label == SOLUTION:
        for prop in ("cost", "time_sec"):
            v = properties.get(prop)
            if not _is_real(v) or v < 0:
                raise SchemaViolation(f"Solution requires real {prop} >= 0, got {v!r}")


def nearest_rank_percentile(values: list[int], fraction: float) -> int:
    """Smallest value whose cumulative rank reaches ``fraction`` of the multiset."""
    if not values:
        raise ValueError("percentile of empty multiset")
    ordered = sorted(values)
    rank = max(1, math.ceil(fraction * len(ordered)))
    return ordered[rank - 1]


# ---------------------------------------------------------------------------
# Reader/writer lock
# ---------------------------------------------------------------------------


class _RWLock:
    """Reentrant single-writer / multi-reader lock.

    A thread may nest read sections, nest write sections, and open read
    sections while holding the write lock. Upgrading (write inside read)
    is refused because it deadlocks under contention.
    """

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers: dict[int, int] = {}
        self._writer: int | None = None
        self._writer_depth = 0

    @contextmanager
    def read(self) -> Iterator[None]:
        me = threading.get_ident()
        with self._cond:
            while self._writer is not None and self._writer != me and me not in self._readers:
                self._cond.wait()
            self._readers[me] = self._readers.get(me, 0) + 1
        try:
            yield
        finally:
            with self._cond:
                self._readers[me] -= 1
                if self._readers[me] == 0:
                    del self._readers[me]
                self._cond.notify_all()

    @contextmanager
    def write(self) -> Iterator[None]:
        me = threading.get_ident()
        with self._cond:
            if me in self._readers and self._writer != me:
                raise RuntimeError("cannot take the write lock inside a read section")
            while (self._writer is not None and self._writer != me) or any(
                t != me for t in self._readers
            ):
                self._cond.wait()
            self._writer = me
            self._writer_depth += 1
        try:
            yield
        finally:
            with self._cond:
                self._writer_depth -= 1
                if self._writer_depth == 0:
                    self._writer = None
                self._cond.notify_all()


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------


class GraphStore:
    """In-memory property graph with merge upserts and file snapshots."""

    def __init__(self) -> None:
        self._nodes: dict[NodeKey, GraphNode] = {}
        self._edges: set[EdgeKey] = set()
        self._out: dict[NodeKey, dict[str, list[NodeKey]]] = {}
        self._in: dict[NodeKey, dict[str, list[NodeKey]]] = {}
        self._lock = _RWLock()
        self._stats_cache: KnowledgeBaseStats | None = None

    # -- locking ------------------------------------------------------------

    @contextmanager
    def read_view(self) -> Iterator[None]:
        """Hold a consistent read view across several query calls."""
        with self._lock.read():
            yield

    @contextmanager
    def batch(self) -> Iterator[None]:
        """Exclusive mutation section; readers see none or all of it."""
        with self._lock.write():
            yield
            self._stats_cache = None

    # -- node operations ------------------------------------------------------

    def upsert_node(self, label: str, key: str, properties: dict[str, Any] | None = None) -> GraphNode:
        """Create the node or merge ``properties`` into the existing one.

        Merging is last-write-wins per property. The merged property map
        must satisfy the label's required-property rules.
        """
        if label not in NODE_LABELS:
            raise SchemaViolation(f"unknown node label {label!r}")
        if not key:
            raise SchemaViolation("node key must be non-empty")
        properties = dict(properties or {})
        for name, value in properties.items():
            _validate_property(name, value)
        with self._lock.write():
            node = self._nodes.get((label, key))
            if node is None:
                _validate_required(label, properties)
                node = GraphNode(label, key, properties)
                self._nodes[(label, key)] = node
            else:
                merged = {**node.properties, **properties}
                _validate_required(label, merged)
                node.properties = merged
            self._stats_cache = None
            return node

    def has_node(self, label: str, key: str) -> bool:
        with self._lock.read():
            return (label, key) in self._nodes

    def get_node(self, label: str, key: str) -> GraphNode | None:
        with self._lock.read():
            return self._nodes.get((label, key))

    def nodes_by_label(self, label: str) -> list[GraphNode]:
        """All nodes with the label, ordered by key."""
        with self._lock.read():
            return [self._nodes[k] for k in sorted(k for k in self._nodes if k[0] == label)]

    def node_count(self) -> int:
        with self._lock.read():
            return len(self._nodes)

    # -- edge operations ------------------------------------------------------

    @staticmethod
    def _as_ref(node: GraphNode | NodeKey) -> NodeKey:
        return node.ref if isinstance(node, GraphNode) else (node[0], node[1])

    def upsert_edge(
        self, source: GraphNode | NodeKey, edge_type: str, target: GraphNode | NodeKey
    ) -> EdgeKey:
        """Create the edge unless it already exists; repeat calls are no-ops."""
        src, dst = self._as_ref(source), self._as_ref(target)
        if edge_type not in EDGE_SCHEMA:
            raise SchemaViolation(f"unknown edge type {edge_type!r}")
        if (src[0], dst[0]) not in EDGE_SCHEMA[edge_type]:
            raise SchemaViolation(
                f"{edge_type} cannot connect {src[0]} to {dst[0]}"
            )
        with self._lock.write():
            if src not in self._nodes or dst not in self._nodes:
                missing = src if src not in self._nodes else dst
                raise SchemaViolation(f"edge endpoint does not exist: {missing}")
            edge: EdgeKey = (edge_type, src, dst)
            if edge not in self._edges:
                self._edges.add(edge)
                self._out.setdefault(src, {}).setdefault(edge_type, []).append(dst)
                self._in.setdefault(dst, {}).setdefault(edge_type, []).append(src)
                self._stats_cache = None
            return edge

    def remove_edge(self, source: GraphNode | NodeKey, edge_type: str, target: GraphNode | NodeKey) -> bool:
        src, dst = self._as_ref(source), self._as_ref(target)
        with self._lock.write():
            edge: EdgeKey = (edge_type, src, dst)
            if edge not in self._edges:
                return False
            self._edges.discard(edge)
            self._out[src][edge_type].remove(dst)
            self._in[dst][edge_type].remove(src)
            self._stats_cache = None
            return True

    def sync_out_edges(
        self, source: GraphNode | NodeKey, edge_type: str, targets: list[GraphNode | NodeKey]
    ) -> tuple[int, int]:
        """Make the source's out-edges of ``edge_type`` exactly ``targets``.

        Used for single-valued and set-valued relationships that a corrected
        record is allowed to rewrite. Returns (created, removed).
        """
        desired = [self._as_ref(t) for t in targets]
        src = self._as_ref(source)
        with self._lock.write():
            current = list(self._out.get(src, {}).get(edge_type, []))
            removed = 0
            for dst in current:
                if dst not in desired:
                    self.remove_edge(src, edge_type, dst)
                    removed += 1
            created = 0
            for dst in desired:
                if (edge_type, src, dst) not in self._edges:
                    self.upsert_edge(src, edge_type, dst)
                    created += 1
            return created, removed

    def edge_count(self, edge_type: str | None = None) -> int:
        with self._lock.read():
            if edge_type is None:
                return len(self._edges)
            return sum(1 for e in self._edges if e[0] == edge_type)

    def neighbors_out(self, node: GraphNode | NodeKey, edge_type: str) -> list[GraphNode]:
        src = self._as_ref(node)
        with self._lock.read():
            refs = self._out.get(src, {}).get(edge_type, [])
            return [self._nodes[r] for r in sorted(refs)]

    def neighbors_in(self, node: GraphNode | NodeKey, edge_type: str) -> list[GraphNode]:
        dst = self._as_ref(node)
        with self._lock.read():
            refs = self._in.get(dst, {}).get(edge_type, [])
            return [self._nodes[r] for r in sorted(refs)]

    # -- queries --------------------------------------------------------------

    def _names_out(self, ref: NodeKey, edge_type: str) -> tuple[str, ...]:
        return tuple(n.key for n in self.neighbors_out(ref, edge_type))

    def _single_out(self, ref: NodeKey, edge_type: str) -> str | None:
        names = self._names_out(ref, edge_type)
        return names[0] if names else None

    def problem_match(self, problem: GraphNode) -> ProblemMatch:
        """Bundle one problem with its entity names, cluster labels, and solutions."""
        ref = problem.ref
        with self._lock.read():
            solutions = tuple(self.neighbors_in(ref, SOLVED))
            return ProblemMatch(
                problem=problem,
                objectives=self._names_out(ref, HAS_OBJECTIVE),
                constraints=self._names_out(ref, HAS_CONSTRAINT),
                representation=self._single_out(ref, HAS_REPRESENTATION),
                constraint_handling=self._single_out(ref, CONS_HANDLING),
                scale_cluster=self._single_out(ref, BELONGS_TO_SCALE),
                objective_cluster=self._single_out(ref, OBJECTIVE_CLUSTER),
                solutions=solutions,
            )

    def match_problems(self, predicate: ProblemPredicate) -> list[ProblemMatch]:
        """Every problem satisfying the predicate, problem_id ascending."""
        with self._lock.read():
            matches = []
            for problem in self.nodes_by_label(PROBLEM):
                bundle = self.problem_match(problem)
                if predicate.matches(
                    problem.properties["num_facilities"],
                    set(bundle.objectives),
                    set(bundle.constraints),
                ):
                    matches.append(bundle)
            return matches

    def stats(self) -> KnowledgeBaseStats:
        """Current statistics; raises EmptyStore when no problems exist."""
        with self._lock.read():
            cached = self._stats_cache
            if cached is not None:
                return cached
            facility_counts = [
                n.properties["num_facilities"] for (label, _), n in self._nodes.items() if label == PROBLEM
            ]
            if not facility_counts:
                raise EmptyStore("store has no Problem nodes")
            by_label: dict[str, int] = {}
            for label, _ in self._nodes:
                by_label[label] = by_label.get(label, 0) + 1
            by_type: dict[str, int] = {}
            for edge_type, _, _ in self._edges:
                by_type[edge_type] = by_type.get(edge_type, 0) + 1
            stats = KnowledgeBaseStats(
                node_count_by_label=dict(sorted(by_label.items())),
                edge_count_by_type=dict(sorted(by_type.items())),
                max_num_facilities=max(facility_counts),
                facility_top_quartile=nearest_rank_percentile(facility_counts, 0.75),
            )
            self._stats_cache = stats
            return stats

    # -- persistence ------------------------------------------------------------

    def snapshot_save(self, path: str | Path) -> None:
        """Write a canonical snapshot; equal stores produce equal bytes."""
        path = Path(path)
        with self._lock.read():
            lines = [_SNAPSHOT_MAGIC]
            lines.append(json.dumps({"node_count": len(self._nodes), "edge_count": len(self._edges)}))
            for ref in sorted(self._nodes):
                node = self._nodes[ref]
                props = {k: node.properties[k] for k in sorted(node.properties)}
                lines.append(
                    "N\t" + json.dumps(
                        {"label": node.label, "key": node.key, "properties": props},
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                )
            for edge_type, src, dst in sorted(self._edges):
                lines.append(
                    "E\t" + json.dumps(
                        {"type": edge_type, "from": list(src), "to": list(dst)},
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                )
            lines.append(
                "END\t" + json.dumps({"node_count": len(self._nodes), "edge_count": len(self._edges)})
            )
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def snapshot_load(cls, path: str | Path) -> "GraphStore":
        """Rebuild a store from a snapshot; FormatError on any corruption."""
        text = Path(path).read_text(encoding="utf-8")
        lines = text.splitlines()
        if not lines or lines[0] != _SNAPSHOT_MAGIC:
            raise FormatError(f"{path}: not a graph snapshot")
        try:
            header = json.loads(lines[1])
            expected_nodes, expected_edges = header["node_count"], header["edge_count"]
        except (IndexError, KeyError, json.JSONDecodeError) as exc:
            raise FormatError(f"{path}: unreadable snapshot header") from exc

        store = cls()
        nodes_seen = edges_seen = 0
        ended = False
        with store.batch():
            for line in lines[2:]:
                if ended:
                    raise FormatError(f"{path}: content after snapshot trailer")
                try:
                    prefix, payload = line.split("\t", 1)
                    record = json.loads(payload)
                except (ValueError, json.JSONDecodeError) as exc:
                    raise FormatError(f"{path}: corrupt snapshot line") from exc
                if prefix == "N":
                    store.upsert_node(record["label"], record["key"], record["properties"])
                    nodes_seen += 1
                elif prefix == "E":
                    store.upsert_edge(tuple(record["from"]), record["type"], tuple(record["to"]))
                    edges_seen += 1
                elif prefix == "END":
                    if record["node_count"] != nodes_seen or record["edge_count"] != edges_seen:
                        raise FormatError(f"{path}: snapshot trailer count mismatch")
                    ended = True
                else:
                    raise FormatError(f"{path}: unknown record prefix {prefix!r}")
        if not ended:
            raise FormatError(f"{path}: snapshot is truncated (missing trailer)")
        if nodes_seen != expected_nodes or edges_seen != expected_edges:
            raise FormatError(f"{path}: snapshot header count mismatch")
        return store
