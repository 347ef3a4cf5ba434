"""Three-channel evidence retrieval over the knowledge graph.

For a normalized user query this module runs:

* an exact graph search — facility-count window of ±25% around the requested
  scale, an OR filter across objectives and constraints, a hard preference
  for multi-objective-cluster problems when the query has two or more
  objectives, and a six-key ranking (objective score desc, constraint score
  desc, facility distance asc, cost asc, time asc, problem id asc);
* an adaptive fallback when the graph search is empty AND the requested
  scale exceeds anything in the knowledge base — candidates then come from
  the top quartile of known facility counts inside the top-level scale
  cluster;
* a cosine similarity search over embedded problem descriptions, fed only
  by free text;
* a cluster trend analysis — the three most common methods among the
  pre-limit graph candidates that share the query's scale cluster and
  objective cluster, with counts and mean costs.

The merged dossier carries provenance plus the method vocabulary needed for
the downstream grounding check.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import graph_store as gs
from .config import ScaleThresholds
from .embedding import EmbeddingIndex, VectorMatch
from .errors import EmptyIndex, EmptyStore, ProviderError, UnknownEntity, ZeroVector
from .graph_store import GraphStore, ProblemMatch, ProblemPredicate
from .ingestion import MULTI_OBJECTIVE, SINGLE_OBJECTIVE, canonical_name

FACILITY_WINDOW_LOWER = 0.75
FACILITY_WINDOW_UPPER = 1.25
TREND_TOP_K = 3


@dataclass(frozen=True)
class UserQuery:
    """A normalized query: entity names are canonical and catalog-backed;
    free text is never used in graph filters."""

    num_facilities: int | None = None
    objectives: tuple[str, ...] = ()
    constraints: tuple[str, ...] = ()
    representation: str | None = None
    free_text: str | None = None


@dataclass(frozen=True)
class GraphEvidenceRow:
    """One solution of one candidate problem, scored against the query."""

    problem_id: str
    num_facilities: int
    objective_names: tuple[str, ...]
    constraint_names: tuple[str, ...]
    representation: str | None
    constraint_handling: str | None
    method: str
    method_key: str
    model_parameters: str
    cost: float
    time_sec: float
    source: str
    objective_score: int
    constraint_score: int
    facility_distance: int
    solution_id: str

    def sort_key(self) -> tuple:
        return (
            -self.objective_score,
            -self.constraint_score,
            self.facility_distance,
            self.cost,
            self.time_sec,
            self.problem_id,
            self.solution_id,
        )


@dataclass(frozen=True)
class TrendEntry:
    method: str
    method_key: str
    count: int
    mean_cost: float


@dataclass(frozen=True)
class ClusterTrend:
    cluster_kind: str  # "scale" or "objective"
    cluster_label: str
    entries: tuple[TrendEntry, ...]


@dataclass(frozen=True)
class GraphSearchResult:
    rows: tuple[GraphEvidenceRow, ...]
    pre_limit_problem_ids: frozenset[str]
    used_fallback: bool


@dataclass(frozen=True)
class EvidenceDossier:
    """Merged output of all retrieval channels, with provenance.

    ``evidence_methods`` is the grounding whitelist (canonical method keys
    that actually occur in the evidence); ``method_catalog`` maps every
    method key known at retrieval time to its display name, so response
    parsing and the grounding check are decidable from the dossier alone.
    """

    graph_rows: tuple[GraphEvidenceRow, ...]
    used_fallback: bool
    vector_matches: tuple[VectorMatch, ...]
    vector_methods: dict[str, tuple[str, ...]]  # problem_id -> method display names
    trends: tuple[ClusterTrend, ...]
    query_echo: UserQuery
    evidence_methods: frozenset[str]
    method_catalog: dict[str, str]
    warnings: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not self.graph_rows and not self.vector_matches and not self.trends


def _suggest(name: str, catalog: list[str], limit: int = 3) -> list[str]:
    """Nearest catalog names by case-insensitive common prefix."""
    def prefix_len(candidate: str) -> int:
        n = 0
        for a, b in zip(name, candidate):
            if a != b:
                break
            n += 1
        return n

    scored = [(prefix_len(c), c) for c in catalog]
    scored = [(s, c) for s, c in scored if s > 0]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [c for _, c in scored[:limit]]


class Retriever:
    """Read-only retrieval facade over one store + one embedding index."""

    def __init__(
        self,
        store: GraphStore,
        *,
        index: EmbeddingIndex | None = None,
        thresholds: ScaleThresholds | None = None,
        graph_limit: int = 5,
        vector_k: int = 5,
    ):
        self.store = store
        self.index = index
        self.thresholds = thresholds or ScaleThresholds()
        self.graph_limit = graph_limit
        self.vector_k = vector_k

    # -- query normalization -------------------------------------------------

    def _validated(self, kind: str, label: str, name: str) -> str:
        canonical = canonical_name(name)
        if not self.store.has_node(label, canonical):
            catalog = [n.key for n in self.store.nodes_by_label(label)]
            raise UnknownEntity(kind, name, _suggest(canonical, catalog))
        return canonical

    def normalize_query(
        self,
        num_facilities: int | None = None,
        objectives: list[str] | None = None,
        constraints: list[str] | None = None,
        representation: str | None = None,
        free_text: str | None = None,
    ) -> UserQuery:
        """Validate typed entities against the catalog; free text passes through.

        Unknown names raise UnknownEntity with prefix-based suggestions.
        """
        if num_facilities is not None:
            if not isinstance(num_facilities, int) or isinstance(num_facilities, bool) or num_facilities < 1:
                raise ValueError(f"num_facilities must be a positive integer, got {num_facilities!r}")
        return UserQuery(
            num_facilities=num_facilities,
            objectives=tuple(self._validated("objective", gs.OBJECTIVE, n) for n in objectives or []),
            constraints=tuple(self._validated("constraint", gs.CONSTRAINT, n) for n in constraints or []),
            representation=(
                self._validated("representation", gs.REPRESENTATION, representation)
                if representation
                else None
            ),
            free_text=free_text.strip() if free_text and free_text.strip() else None,
        )

    # -- graph channel ---------------------------------------------------------

    def _rows_for(self, matches: list[ProblemMatch], query: UserQuery) -> list[GraphEvidenceRow]:
        rows = []
        for match in matches:
            n_p = match.problem.properties["num_facilities"]
            objective_score = len(set(query.objectives) & set(match.objectives))
            constraint_score = len(set(query.constraints) & set(match.constraints))
            distance = abs(n_p - query.num_facilities) if query.num_facilities is not None else 0
            for solution in sorted(match.solutions, key=lambda s: s.key):
                method_key = solution.properties["method"]
                method_node = self.store.get_node(gs.METHOD, method_key)
                display = method_node.properties.get("name", method_key) if method_node else method_key
                rows.append(
                    GraphEvidenceRow(
                        problem_id=match.problem.key,
                        num_facilities=n_p,
                        objective_names=match.objectives,
                        constraint_names=match.constraints,
                        representation=match.representation,
                        constraint_handling=match.constraint_handling,
                        method=display,
                        method_key=method_key,
                        model_parameters=solution.properties.get("model_parameters", ""),
                        cost=solution.properties["cost"],
                        time_sec=solution.properties["time_sec"],
                        source=solution.properties.get("source", ""),
                        objective_score=objective_score,
                        constraint_score=constraint_score,
                        facility_distance=distance,
                        solution_id=solution.key,
                    )
                )
        rows.sort(key=GraphEvidenceRow.sort_key)
        return rows

    def graph_search(self, query: UserQuery, limit: int | None = None) -> GraphSearchResult:
        """Exact search: facility window AND objective-OR-constraint filter,
        multi-objective cluster preference, six-key ranking."""
        limit = self.graph_limit if limit is None else limit
        n = query.num_facilities
        predicate = ProblemPredicate(
            min_facilities=FACILITY_WINDOW_LOWER * n if n is not None else None,
            max_facilities=FACILITY_WINDOW_UPPER * n if n is not None else None,
            any_objectives=query.objectives,
            any_constraints=query.constraints,
        )
        matches = self.store.match_problems(predicate)
        if len(query.objectives) >= 2:
            multi = [m for m in matches if m.objective_cluster == MULTI_OBJECTIVE]
            if multi:
                matches = multi
        rows = self._rows_for(matches, query)
        return GraphSearchResult(
            rows=tuple(rows[:limit]),
            pre_limit_problem_ids=frozenset(m.problem.key for m in matches),
            used_fallback=False,
        )

    def fallback_search(self, query: UserQuery, limit: int | None = None) -> GraphSearchResult:
        """Large-scale precedent search for queries beyond the known maximum:
        problems in the top facility-count quartile AND the top-level scale
        cluster, ranked by the same comparator."""
        limit = self.graph_limit if limit is None else limit
        quartile = self.store.stats().facility_top_quartile
        top_level = self.thresholds.top_level
        matches = [
            m
            for m in self.store.match_problems(ProblemPredicate(min_facilities=quartile))
            if m.scale_cluster == top_level
        ]
        rows = self._rows_for(matches, query)
        return GraphSearchResult(
            rows=tuple(rows[:limit]),
            pre_limit_problem_ids=frozenset(m.problem.key for m in matches),
            used_fallback=True,
        )

    # -- cluster channel ---------------------------------------------------------

    def _trend_for(
        self, kind: str, label: str, matches: list[ProblemMatch], cluster_of: str
    ) -> ClusterTrend | None:
        counts: dict[str, int] = {}
        costs: dict[str, list[float]] = {}
        for match in matches:
            if getattr(match, cluster_of) != label:
                continue
            for solution in match.solutions:
                method_key = solution.properties["method"]
                counts[method_key] = counts.get(method_key, 0) + 1
                costs.setdefault(method_key, []).append(solution.properties["cost"])
        if not counts:
            return None
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:TREND_TOP_K]
        entries = []
        for method_key, count in ordered:
            method_node = self.store.get_node(gs.METHOD, method_key)
            display = method_node.properties.get("name", method_key) if method_node else method_key
            entries.append(
                TrendEntry(
                    method=display,
                    method_key=method_key,
                    count=count,
                    mean_cost=sum(costs[method_key]) / count,
                )
            )
        return ClusterTrend(cluster_kind=kind, cluster_label=label, entries=tuple(entries))

    def cluster_trends(
        self, pre_limit_problem_ids: frozenset[str], query: UserQuery
    ) -> tuple[ClusterTrend, ...]:
        """Top-3 method frequencies among the candidates sharing the query's
        scale cluster and objective cluster; a trend with no data is omitted."""
        matches = [
            self.store.problem_match(node)
            for node in self.store.nodes_by_label(gs.PROBLEM)
            if node.key in pre_limit_problem_ids
        ]
        trends = []
        if query.num_facilities is not None:
            scale_label = self.thresholds.label(query.num_facilities)
            trend = self._trend_for("scale", scale_label, matches, "scale_cluster")
            if trend:
                trends.append(trend)
        if query.objectives:
            objective_label = MULTI_OBJECTIVE if len(query.objectives) >= 2 else SINGLE_OBJECTIVE
            trend = self._trend_for("objective", objective_label, matches, "objective_cluster")
            if trend:
                trends.append(trend)
        return tuple(trends)

    # -- assembly ---------------------------------------------------------

    def _methods_of_problem(self, problem_id: str) -> tuple[tuple[str, str], ...]:
        """(canonical, display) methods across a problem's solutions."""
        problem = self.store.get_node(gs.PROBLEM, problem_id)
        if problem is None:
            return ()
        seen: dict[str, str] = {}
        for solution in self.store.neighbors_in(problem, gs.SOLVED):
            key = solution.properties["method"]
            if key not in seen:
                node = self.store.get_node(gs.METHOD, key)
                seen[key] = node.properties.get("name", key) if node else key
        return tuple(sorted(seen.items()))

    def retrieve_evidence(self, query: UserQuery) -> EvidenceDossier:
        """Run all channels and merge. Deterministic for a fixed store+query;
        vector-channel provider failures degrade to a warning instead of
        failing the dossier."""
        warnings: list[str] = []
        with self.store.read_view():
            result = self.graph_search(query)
            if not result.rows and query.num_facilities is not None:
                try:
                    known_max = self.store.stats().max_num_facilities
                except EmptyStore:
                    known_max = None
                if known_max is not None and query.num_facilities > known_max:
                    result = self.fallback_search(query)

            trends = self.cluster_trends(result.pre_limit_problem_ids, query)

            vector_matches: tuple[VectorMatch, ...] = ()
            vector_methods: dict[str, tuple[str, ...]] = {}
            if query.free_text and self.index is not None:
                try:
                    vector_matches = tuple(self.index.similarity_search(query.free_text, self.vector_k))
                except (ProviderError, EmptyIndex, ZeroVector) as exc:
                    warnings.append(f"vector search degraded: {exc}")
                for match in vector_matches:
                    vector_methods[match.problem_id] = tuple(
                        display for _, display in self._methods_of_problem(match.problem_id)
                    )

            evidence_methods: set[str] = {row.method_key for row in result.rows}
            for trend in trends:
                evidence_methods.update(entry.method_key for entry in trend.entries)
            for match in vector_matches:
                evidence_methods.update(key for key, _ in self._methods_of_problem(match.problem_id))

            method_catalog = {
                node.key: node.properties.get("name", node.key)
                for node in self.store.nodes_by_label(gs.METHOD)
            }

        return EvidenceDossier(
            graph_rows=result.rows,
            used_fallback=result.used_fallback,
            vector_matches=vector_matches,
            vector_methods=vector_methods,
            trends=trends,
            query_echo=query,
            evidence_methods=frozenset(evidence_methods),
            method_catalog=method_catalog,
            warnings=tuple(warnings),
        )
