import random

import pytest

from flpadvisor import (
    EmbeddingIndex,
    GraphStore,
    HashedBagOfWordsEmbedding,
    ProviderError,
    Retriever,
    UnknownEntity,
    UserQuery,
    load_corpus,
)

from conftest import corpus_row

OBJECTIVE_POOL = ["alpha goal", "beta goal", "gamma goal", "delta goal"]
CONSTRAINT_POOL = ["wall limit", "area limit", "ratio limit"]
METHOD_POOL = ["GA", "PSO", "HSA", "TabuSearch", "BRKGA-LP", "CRO-SL"]


def random_store(rng, thresholds, families, max_problems=20):
    """Random corpus plus an independent record list for oracle checks."""
    records = []
    rows = []
    for i in range(rng.randint(1, max_problems)):
        pid = f"P_{i:03d}"
        n = rng.randint(2, 60)
        objectives = rng.sample(OBJECTIVE_POOL, rng.randint(0, 3))
        constraints = rng.sample(CONSTRAINT_POOL, rng.randint(0, 2))
        solutions = []
        for method in rng.sample(METHOD_POOL, rng.randint(1, 3)):
            cost = rng.choice([10.0, 20.0, 30.0, 45.5])
            time_sec = rng.choice([1.0, 2.0, 3.5])
            rows.append(
                corpus_row(
                    problem_id=pid,
                    num_facilities=n,
                    objective=", ".join(objectives),
                    constraints=", ".join(constraints),
                    method=method,
                    cost=cost,
                    time_sec=time_sec,
                )
            )
            solutions.append(
                {
                    "solution_id": f"{pid}::{method.lower()}::1",
                    "method": method,
                    "cost": cost,
                    "time_sec": time_sec,
                }
            )
        records.append(
            {
                "pid": pid,
                "n": n,
                "objectives": set(objectives),
                "constraints": set(constraints),
                "solutions": solutions,
            }
        )
    store = GraphStore()
    load_corpus(rows, store, thresholds=thresholds, families=families)
    return store, records


def oracle_graph_search(records, query: UserQuery, limit: int):
    """Independent full-enumeration filter + sort with the six-key comparator
    (solution id appended as the determinism tail)."""
    n = query.num_facilities
    candidates = []
    for r in records:
        if n is not None and not (0.75 * n <= r["n"] <= 1.25 * n):
            continue
        if query.objectives or query.constraints:
            if not (set(query.objectives) & r["objectives"]) and not (
                set(query.constraints) & r["constraints"]
            ):
                continue
        candidates.append(r)
    if len(query.objectives) >= 2:
        multi = [r for r in candidates if len(r["objectives"]) >= 2]
        if multi:
            candidates = multi
    rows = []
    for r in candidates:
        objective_score = len(set(query.objectives) & r["objectives"])
        constraint_score = len(set(query.constraints) & r["constraints"])
        distance = abs(r["n"] - n) if n is not None else 0
        for s in r["solutions"]:
            rows.append(
                (
                    -objective_score,
                    -constraint_score,
                    distance,
                    s["cost"],
                    s["time_sec"],
                    r["pid"],
                    s["solution_id"],
                )
            )
    rows.sort()
    pre_limit_ids = {r["pid"] for r in candidates}
    return rows[:limit], pre_limit_ids


def row_as_key(row):
    return (
        -row.objective_score,
        -row.constraint_score,
        row.facility_distance,
        row.cost,
        row.time_sec,
        row.problem_id,
        row.solution_id,
    )


class TestNormalizeQuery:
    def test_valid_entities_accepted(self, seed_store):
        retriever = Retriever(seed_store)
        query = retriever.normalize_query(
            num_facilities=10,
            objectives=["min material handling cost"],
            constraints=["non-overlapping", "boundary constraints"],
        )
        assert query.num_facilities == 10
        assert query.objectives == ("min material handling cost",)
        assert query.constraints == ("boundary constraints", "non-overlapping") or query.constraints == (
            "non-overlapping",
            "boundary constraints",
        )

    def test_all_optional(self, seed_store):
        retriever = Retriever(seed_store)
        query = retriever.normalize_query(num_facilities=30)
        assert query.objectives == () and query.constraints == ()

    def test_typo_rejected_with_suggestion(self, seed_store):
        retriever = Retriever(seed_store)
        with pytest.raises(UnknownEntity) as excinfo:
            retriever.normalize_query(objectives=["min materail handling cost"])
        assert "min material handling cost" in excinfo.value.suggestions

    def test_case_and_spacing_normalized(self, seed_store):
        retriever = Retriever(seed_store)
        query = retriever.normalize_query(objectives=["  MIN   material handling COST "])
        assert query.objectives == ("min material handling cost",)

    def test_free_text_passes_through_unvalidated(self, seed_store):
        retriever = Retriever(seed_store)
        query = retriever.normalize_query(free_text="weird words nowhere in any catalog")
        assert query.free_text == "weird words nowhere in any catalog"

    def test_nonpositive_facilities_rejected(self, seed_store):
        retriever = Retriever(seed_store)
        with pytest.raises(ValueError):
            retriever.normalize_query(num_facilities=0)


class TestGraphSearch:
    def test_facility_window_bounds(self, thresholds, families):
        rows = [corpus_row(problem_id=f"P_{n}", num_facilities=n) for n in (6, 7, 8, 12, 13, 30)]
        store = GraphStore()
        load_corpus(rows, store, thresholds=thresholds, families=families)
        retriever = Retriever(store)
        result = retriever.graph_search(UserQuery(num_facilities=10), limit=100)
        ids = sorted({row.problem_id for row in result.rows})
        assert ids == ["P_12", "P_8"]  # window [7.5, 12.5]

    def test_window_boundary_inclusive(self, thresholds, families):
        rows = [corpus_row(problem_id=f"P_{n}", num_facilities=n) for n in (6, 10)]
        store = GraphStore()
        load_corpus(rows, store, thresholds=thresholds, families=families)
        retriever = Retriever(store)
        result = retriever.graph_search(UserQuery(num_facilities=8), limit=100)
        assert sorted({r.problem_id for r in result.rows}) == ["P_10", "P_6"]

    def test_multi_objective_preference_drops_single_objective(self, seed_store):
        retriever = Retriever(seed_store)
        query = retriever.normalize_query(
            num_facilities=15,
            objectives=["max closeness rating", "min material handling cost"],
            constraints=["non-overlapping", "boundary constraints", "aspect ratio"],
        )
        result = retriever.graph_search(query)
        assert result.rows, "expected multi-objective precedents"
        assert result.rows[0].method == "HSA"
        for row in result.rows:
            assert len(row.objective_names) >= 2, "single-objective problem leaked through"
        assert "P_16A" not in {row.problem_id for row in result.rows}

    def test_relevance_beats_cost(self, thresholds, families):
        rows = [
            corpus_row(problem_id="P_match", objective="alpha goal", cost=500.0),
            corpus_row(problem_id="P_cheap", objective="beta goal", constraints="wall limit", cost=1.0),
        ]
        store = GraphStore()
        load_corpus(rows, store, thresholds=thresholds, families=families)
        retriever = Retriever(store)
        query = UserQuery(objectives=("alpha goal",), constraints=("wall limit",))
        result = retriever.graph_search(query)
        assert result.rows[0].problem_id == "P_match"  # objective score 1 beats cost 1.0

    def test_ranking_matches_brute_force_on_random_stores(self, thresholds, families):
        rng = random.Random(20260808)
        for trial in range(30):
            store, records = random_store(rng, thresholds, families)
            retriever = Retriever(store)
            n = rng.choice([None, rng.randint(2, 70)])
            query = UserQuery(
                num_facilities=n,
                objectives=tuple(rng.sample(OBJECTIVE_POOL, rng.randint(0, 2))),
                constraints=tuple(rng.sample(CONSTRAINT_POOL, rng.randint(0, 2))),
            )
            limit = rng.choice([3, 5, 100])
            result = retriever.graph_search(query, limit=limit)
            expected_rows, expected_ids = oracle_graph_search(records, query, limit)
            assert [row_as_key(r) for r in result.rows] == expected_rows, (trial, query)
            assert set(result.pre_limit_problem_ids) == expected_ids

    def test_insertion_order_does_not_change_ranking(self, thresholds, families):
        rows = [
            corpus_row(problem_id="P_1", objective="alpha goal", method="GA", cost=10.0),
            corpus_row(problem_id="P_2", objective="alpha goal", method="PSO", cost=10.0),
            corpus_row(problem_id="P_3", objective="alpha goal", method="HSA", cost=5.0),
        ]
        query = UserQuery(objectives=("alpha goal",))
        orders = [rows, rows[::-1], [rows[1], rows[2], rows[0]]]
        outputs = []
        for order in orders:
            store = GraphStore()
            load_corpus(order, store, thresholds=thresholds, families=families)
            outputs.append([r.solution_id for r in Retriever(store).graph_search(query).rows])
        assert outputs[0] == outputs[1] == outputs[2]


class TestFallbackSearch:
    def test_fallback_returns_top_quartile_large_problems(self, seed_store, thresholds):
        retriever = Retriever(seed_store, thresholds=thresholds)
        query = UserQuery(num_facilities=100, objectives=("min material handling cost",))
        result = retriever.fallback_search(query)
        assert result.used_fallback
        quartile = seed_store.stats().facility_top_quartile
        for row in result.rows:
            assert row.num_facilities >= quartile
            assert row.num_facilities > 35  # large cluster under default thresholds
        assert {r.problem_id for r in result.rows} == {"P_40A", "P_40B"}

    def test_trigger_only_when_empty_and_beyond_max(self, seed_store):
        retriever = Retriever(seed_store)
        # n beyond max and window empty -> fallback fires
        dossier = retriever.retrieve_evidence(UserQuery(num_facilities=100))
        assert dossier.used_fallback
        # empty result but n <= max -> no fallback (window [18,30] holds only
        # problems that fail the objective filter)
        query = UserQuery(num_facilities=24, objectives=("max closeness rating",))
        dossier = retriever.retrieve_evidence(query)
        assert not dossier.used_fallback
        assert not dossier.graph_rows

    def test_quartile_oracle_on_known_sizes(self, thresholds, families):
        rows = [corpus_row(problem_id=f"P_{n}", num_facilities=n) for n in (6, 10, 15, 30, 40)]
        store = GraphStore()
        load_corpus(rows, store, thresholds=thresholds, families=families)
        retriever = Retriever(store, thresholds=thresholds)
        result = retriever.fallback_search(UserQuery(num_facilities=200))
        # quartile = 30, large cluster = n >= 36 -> only the 40-facility problem
        assert {r.problem_id for r in result.rows} == {"P_40"}


class TestClusterTrends:
    def test_frequency_counting(self, thresholds, families):
        rows = (
            [corpus_row(problem_id=f"P_g{i}", num_facilities=10, method="GA",
                        model_parameters=f"seed={i}") for i in range(3)]
            + [corpus_row(problem_id=f"P_p{i}", num_facilities=10, method="PSO",
                          model_parameters=f"seed={i}") for i in range(2)]
            + [corpus_row(problem_id="P_t", num_facilities=10, method="TabuSearch")]
        )
        store = GraphStore()
        load_corpus(rows, store, thresholds=thresholds, families=families)
        retriever = Retriever(store, thresholds=thresholds)
        ids = frozenset(n.key for n in store.nodes_by_label("Problem"))
        trends = retriever.cluster_trends(ids, UserQuery(num_facilities=10))
        scale = [t for t in trends if t.cluster_kind == "scale"][0]
        assert [(e.method, e.count) for e in scale.entries] == [("GA", 3), ("PSO", 2), ("TabuSearch", 1)]

    def test_tie_break_by_name_with_five_methods(self, thresholds, families):
        methods = ["GA", "PSO", "HSA", "TabuSearch", "CRO-SL"]
        rows = [
            corpus_row(problem_id=f"P_{i}", num_facilities=10, method=m)
            for i, m in enumerate(methods)
        ]
        store = GraphStore()
        load_corpus(rows, store, thresholds=thresholds, families=families)
        retriever = Retriever(store, thresholds=thresholds)
        ids = frozenset(n.key for n in store.nodes_by_label("Problem"))
        trends = retriever.cluster_trends(ids, UserQuery(num_facilities=10))
        scale = [t for t in trends if t.cluster_kind == "scale"][0]
        assert len(scale.entries) == 3
        assert [e.method_key for e in scale.entries] == ["cro-sl", "ga", "hsa"]

    def test_counts_match_group_by_oracle(self, thresholds, families):
        rng = random.Random(99)
        store, records = random_store(rng, thresholds, families)
        retriever = Retriever(store, thresholds=thresholds)
        n = 10
        ids = frozenset(r["pid"] for r in records)
        trends = retriever.cluster_trends(ids, UserQuery(num_facilities=n))

        label = thresholds.label(n)
        counts = {}
        for r in records:
            if thresholds.label(r["n"]) != label:
                continue
            for s in r["solutions"]:
                counts[s["method"].lower()] = counts.get(s["method"].lower(), 0) + 1
        expected = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:3]
        scale_trends = [t for t in trends if t.cluster_kind == "scale"]
        if expected:
            assert [(e.method_key, e.count) for e in scale_trends[0].entries] == expected
        else:
            assert not scale_trends

    def test_mean_cost(self, thresholds, families):
        rows = [
            corpus_row(problem_id="P_1", num_facilities=10, method="GA", cost=10.0),
            corpus_row(problem_id="P_2", num_facilities=10, method="GA", cost=30.0),
        ]
        store = GraphStore()
        load_corpus(rows, store, thresholds=thresholds, families=families)
        retriever = Retriever(store, thresholds=thresholds)
        ids = frozenset(["P_1", "P_2"])
        trends = retriever.cluster_trends(ids, UserQuery(num_facilities=10))
        scale = [t for t in trends if t.cluster_kind == "scale"][0]
        assert scale.entries[0].mean_cost == 20.0

    def test_objective_trend_omitted_without_objectives(self, seed_store, thresholds):
        retriever = Retriever(seed_store, thresholds=thresholds)
        dossier = retriever.retrieve_evidence(UserQuery(num_facilities=30))
        kinds = [t.cluster_kind for t in dossier.trends]
        assert kinds == ["scale"]


class TestRetrieveEvidence:
    def test_case_one_contains_cro_sl(self, seed_store, seed_index):
        retriever = Retriever(seed_store, index=seed_index)
        query = retriever.normalize_query(
            num_facilities=10,
            objectives=["min material handling cost"],
            constraints=["non-overlapping", "boundary constraints"],
        )
        dossier = retriever.retrieve_evidence(query)
        assert dossier.graph_rows[0].method == "CRO-SL"
        trend_methods = {e.method for t in dossier.trends for e in t.entries}
        assert "CRO-SL" in trend_methods
        assert "cro-sl" in dossier.evidence_methods

    def test_no_free_text_means_no_vector_channel(self, seed_store, thresholds, families):
        calls = []

        class CountingProvider(HashedBagOfWordsEmbedding):
            def embed(self, text):
                calls.append(text)
                return super().embed(text)

        index = EmbeddingIndex(seed_store, CountingProvider())
        index.index_all()
        calls.clear()
        retriever = Retriever(seed_store, index=index)
        dossier = retriever.retrieve_evidence(UserQuery(num_facilities=10))
        assert dossier.vector_matches == ()
        assert calls == []

    def test_provider_outage_degrades_with_warning(self, seed_store, seed_index):
        class DownProvider(HashedBagOfWordsEmbedding):
            def embed(self, text):
                raise ProviderError("down")

        index = EmbeddingIndex(seed_store, DownProvider())
        retriever = Retriever(seed_store, index=index)
        query = UserQuery(num_facilities=10, free_text="compact cells near docks")
        dossier = retriever.retrieve_evidence(query)
        assert dossier.graph_rows
        assert dossier.trends
        assert dossier.vector_matches == ()
        assert any("vector search degraded" in w for w in dossier.warnings)

    def test_free_text_populates_vector_channel(self, seed_store, seed_index):
        retriever = Retriever(seed_store, index=seed_index)
        query = UserQuery(free_text="facility layout problem with 30 facilities")
        dossier = retriever.retrieve_evidence(query)
        assert len(dossier.vector_matches) == 5
        for match in dossier.vector_matches:
            assert dossier.vector_methods[match.problem_id]

    def test_deterministic_for_fixed_store_and_query(self, seed_store, seed_index):
        retriever = Retriever(seed_store, index=seed_index)
        query = UserQuery(num_facilities=10, objectives=("min material handling cost",))
        assert retriever.retrieve_evidence(query) == retriever.retrieve_evidence(query)

    def test_every_dossier_method_exists_in_store(self, seed_store, seed_index):
        retriever = Retriever(seed_store, index=seed_index)
        query = UserQuery(num_facilities=30, free_text="layout with aspect ratio limits")
        dossier = retriever.retrieve_evidence(query)
        for key in dossier.evidence_methods:
            assert seed_store.has_node("Method", key)
