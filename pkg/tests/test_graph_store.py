import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flpadvisor import EmptyStore, FormatError, GraphStore, ProblemPredicate, SchemaViolation
from flpadvisor.graph_store import nearest_rank_percentile


def nearest_rank_oracle(values: list[int]) -> int:
    """Independent nearest-rank p75: walk the sorted multiset until the
    cumulative count reaches 75% of the total."""
    ordered = sorted(values)
    need = 0.75 * len(ordered)
    for i, v in enumerate(ordered, start=1):
        if i >= need:
            return v
    return ordered[-1]


def make_problem(store: GraphStore, pid: str, n: int, objectives=(), constraints=()):
    problem = store.upsert_node("Problem", pid, {"num_facilities": n})
    for name in objectives:
        node = store.upsert_node("Objective", name)
        store.upsert_edge(problem, "HAS_OBJECTIVE", node)
    for name in constraints:
        node = store.upsert_node("Constraint", name)
        store.upsert_edge(problem, "HAS_CONSTRAINT", node)
    return problem


class TestUpsertNode:
    def test_merge_is_idempotent(self):
        store = GraphStore()
        first = store.upsert_node("Method", "GA")
        second = store.upsert_node("Method", "GA")
        assert first is second
        assert len(store.nodes_by_label("Method")) == 1

    def test_problem_node_created_with_scale(self):
        store = GraphStore()
        node = store.upsert_node("Problem", "P_6", {"num_facilities": 6})
        assert node.properties["num_facilities"] == 6

    def test_solution_scalars_read_back_bit_identical(self):
        store = GraphStore()
        store.upsert_node("Solution", "S_1", {"cost": 1147.781, "time_sec": 185.0})
        node = store.get_node("Solution", "S_1")
        assert node.properties["cost"] == 1147.781
        assert node.properties["time_sec"] == 185.0

    def test_merge_overwrites_and_keeps_properties(self):
        store = GraphStore()
        store.upsert_node("Problem", "P_1", {"num_facilities": 5, "floor_w": 10.0})
        store.upsert_node("Problem", "P_1", {"floor_w": 20.0})
        node = store.get_node("Problem", "P_1")
        assert node.properties == {"num_facilities": 5, "floor_w": 20.0}

    @pytest.mark.parametrize(
        "label,props",
        [
            ("Problem", {}),
            ("Problem", {"num_facilities": 0}),
            ("Problem", {"num_facilities": "six"}),
            ("Solution", {"cost": -1.0, "time_sec": 0.0}),
            ("Solution", {"cost": 1.0}),
        ],
    )
    def test_required_property_violations(self, label, props):
        store = GraphStore()
        with pytest.raises(SchemaViolation):
            store.upsert_node(label, "X", props)

    def test_unknown_label_and_empty_key_rejected(self):
        store = GraphStore()
        with pytest.raises(SchemaViolation):
            store.upsert_node("Widget", "w")
        with pytest.raises(SchemaViolation):
            store.upsert_node("Method", "")

    def test_property_types_validated(self):
        store = GraphStore()
        with pytest.raises(SchemaViolation):
            store.upsert_node("Method", "GA", {"bad": {"nested": 1}})
        store.upsert_node("Method", "GA", {"vector": [1.0, 2.5]})


class TestUpsertEdge:
    def test_repeat_edge_is_noop(self):
        store = GraphStore()
        solution = store.upsert_node("Solution", "S_1", {"cost": 1.0, "time_sec": 1.0})
        problem = store.upsert_node("Problem", "P_6", {"num_facilities": 6})
        store.upsert_edge(solution, "SOLVED", problem)
        store.upsert_edge(solution, "SOLVED", problem)
        assert store.edge_count("SOLVED") == 1

    def test_problem_objective_edge(self):
        store = GraphStore()
        problem = store.upsert_node("Problem", "P_6", {"num_facilities": 6})
        objective = store.upsert_node("Objective", "min material handling cost")
        store.upsert_edge(problem, "HAS_OBJECTIVE", objective)
        assert store.edge_count("HAS_OBJECTIVE") == 1

    def test_illegal_endpoints_rejected(self):
        store = GraphStore()
        solution = store.upsert_node("Solution", "S_1", {"cost": 1.0, "time_sec": 1.0})
        problem = store.upsert_node("Problem", "P_6", {"num_facilities": 6})
        with pytest.raises(SchemaViolation):
            store.upsert_edge(solution, "HAS_OBJECTIVE", problem)

    def test_is_type_of_accepts_both_legal_pairs(self):
        store = GraphStore()
        method = store.upsert_node("Method", "ga")
        method_cluster = store.upsert_node("MethodCluster", "evolutionary")
        handling = store.upsert_node("ConstraintHandling", "penalty function")
        handling_cluster = store.upsert_node("ConstraintHandlingCluster", "penalty-function")
        store.upsert_edge(method, "IS_TYPE_OF", method_cluster)
        store.upsert_edge(handling, "IS_TYPE_OF", handling_cluster)
        with pytest.raises(SchemaViolation):
            store.upsert_edge(method, "IS_TYPE_OF", handling_cluster)

    def test_missing_endpoint_rejected(self):
        store = GraphStore()
        problem = store.upsert_node("Problem", "P_6", {"num_facilities": 6})
        with pytest.raises(SchemaViolation):
            store.upsert_edge(problem, "HAS_OBJECTIVE", ("Objective", "ghost"))


class TestMatchProblems:
    def test_numeric_range(self):
        store = GraphStore()
        for pid, n in [("P_6", 6), ("P_10", 10), ("P_30", 30)]:
            make_problem(store, pid, n)
        matches = store.match_problems(ProblemPredicate(min_facilities=8, max_facilities=12))
        assert [m.problem.key for m in matches] == ["P_10"]

    def test_objective_membership(self):
        store = GraphStore()
        make_problem(store, "P_1", 6, objectives=["min material handling cost"])
        make_problem(store, "P_2", 6, objectives=["max closeness rating"])
        matches = store.match_problems(
            ProblemPredicate(any_objectives=("min material handling cost",))
        )
        assert [m.problem.key for m in matches] == ["P_1"]

    def test_or_between_objectives_and_constraints(self):
        store = GraphStore()
        make_problem(store, "P_1", 6, objectives=["a"])
        make_problem(store, "P_2", 6, constraints=["c"])
        make_problem(store, "P_3", 6, objectives=["z"], constraints=["y"])
        matches = store.match_problems(
            ProblemPredicate(any_objectives=("a",), any_constraints=("c",))
        )
        assert [m.problem.key for m in matches] == ["P_1", "P_2"]

    @given(st.data())
    @settings(max_examples=50, deadline=None)
    def test_matches_brute_force_scan(self, data):
        records = data.draw(
            st.lists(
                st.tuples(
                    st.integers(min_value=1, max_value=60),
                    st.sets(st.sampled_from(["a", "b", "c", "d"]), max_size=3),
                    st.sets(st.sampled_from(["x", "y", "z"]), max_size=2),
                ),
                min_size=0,
                max_size=20,
            )
        )
        lo = data.draw(st.one_of(st.none(), st.integers(min_value=1, max_value=60)))
        hi = data.draw(st.one_of(st.none(), st.integers(min_value=1, max_value=60)))
        objectives = tuple(data.draw(st.sets(st.sampled_from(["a", "b", "q"]), max_size=2)))
        constraints = tuple(data.draw(st.sets(st.sampled_from(["x", "w"]), max_size=2)))

        store = GraphStore()
        rows = []
        for i, (n, objs, cons) in enumerate(records):
            pid = f"P_{i:03d}"
            make_problem(store, pid, n, objectives=objs, constraints=cons)
            rows.append((pid, n, objs, cons))

        predicate = ProblemPredicate(
            min_facilities=lo, max_facilities=hi, any_objectives=objectives, any_constraints=constraints
        )
        got = [m.problem.key for m in store.match_problems(predicate)]

        expected = []
        for pid, n, objs, cons in sorted(rows):
            if lo is not None and n < lo:
                continue
            if hi is not None and n > hi:
                continue
            if objectives or constraints:
                if not (set(objectives) & objs) and not (set(constraints) & cons):
                    continue
            expected.append(pid)
        assert got == expected


class TestStats:
    def test_max_and_quartile(self):
        store = GraphStore()
        for i, n in enumerate([6, 10, 15, 30, 40]):
            make_problem(store, f"P_{i}", n)
        stats = store.stats()
        assert stats.max_num_facilities == 40
        # nearest-rank p75 of {6,10,15,30,40}: rank ceil(0.75*5)=4 -> 30
        assert stats.facility_top_quartile == 30
        assert stats.facility_top_quartile == nearest_rank_oracle([6, 10, 15, 30, 40])

    def test_empty_store_raises(self):
        store = GraphStore()
        with pytest.raises(EmptyStore):
            store.stats()

    @given(st.lists(st.integers(min_value=1, max_value=500), min_size=1, max_size=60))
    @settings(max_examples=100, deadline=None)
    def test_quartile_matches_oracle(self, values):
        assert nearest_rank_percentile(values, 0.75) == nearest_rank_oracle(values)
        # the quartile is always a member of the multiset
        assert nearest_rank_percentile(values, 0.75) in values

    @given(st.lists(st.integers(min_value=1, max_value=99), min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_max_tracks_full_scan_after_mutations(self, sizes):
        store = GraphStore()
        for i, n in enumerate(sizes):
            make_problem(store, f"P_{i:02d}", n)
            assert store.stats().max_num_facilities == max(sizes[: i + 1])

    def test_counts_by_label_and_type(self):
        store = GraphStore()
        problem = make_problem(store, "P_1", 5, objectives=["a", "b"])
        solution = store.upsert_node("Solution", "S", {"cost": 1.0, "time_sec": 2.0})
        store.upsert_edge(solution, "SOLVED", problem)
        stats = store.stats()
        assert stats.node_count_by_label == {"Objective": 2, "Problem": 1, "Solution": 1}
        assert stats.edge_count_by_type == {"HAS_OBJECTIVE": 2, "SOLVED": 1}


class TestSnapshot:
    def test_round_trip_preserves_stats_and_properties(self, tmp_path):
        store = GraphStore()
        problem = make_problem(store, "P_1", 7, objectives=["a"], constraints=["x"])
        store.upsert_node("Problem", "P_1", {"embedding": [0.25, -1.5, 3.0], "floor_w": 12.5})
        solution = store.upsert_node(
            "Solution", "S", {"cost": 1147.781, "time_sec": 185.0, "source": "fixture"}
        )
        store.upsert_edge(solution, "SOLVED", problem)
        path = tmp_path / "kb.snapshot"
        store.snapshot_save(path)
        loaded = GraphStore.snapshot_load(path)
        assert loaded.stats() == store.stats()
        assert loaded.get_node("Problem", "P_1").properties == store.get_node("Problem", "P_1").properties
        assert loaded.get_node("Problem", "P_1").properties["embedding"] == [0.25, -1.5, 3.0]

    def test_truncated_snapshot_raises_format_error(self, tmp_path):
        store = GraphStore()
        make_problem(store, "P_1", 7)
        path = tmp_path / "kb.snapshot"
        store.snapshot_save(path)
        content = path.read_text("utf-8").splitlines()
        path.write_text("\n".join(content[:-1]) + "\n", "utf-8")
        with pytest.raises(FormatError):
            GraphStore.snapshot_load(path)

    def test_garbage_file_raises_format_error(self, tmp_path):
        path = tmp_path / "junk"
        path.write_text("this is not a snapshot\n", "utf-8")
        with pytest.raises(FormatError):
            GraphStore.snapshot_load(path)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            GraphStore.snapshot_load(tmp_path / "absent")

    def test_snapshot_isolation_from_later_mutations(self, tmp_path):
        store = GraphStore()
        make_problem(store, "P_1", 7)
        path = tmp_path / "kb.snapshot"
        store.snapshot_save(path)
        before = store.stats()
        make_problem(store, "P_2", 50)
        loaded = GraphStore.snapshot_load(path)
        assert loaded.stats() == before
        assert loaded.stats().max_num_facilities == 7

    def test_equal_stores_serialize_byte_identically(self, tmp_path):
        def build(order):
            store = GraphStore()
            for pid, n in order:
                make_problem(store, pid, n, objectives=["a"])
            return store

        a = build([("P_1", 5), ("P_2", 9)])
        b = build([("P_2", 9), ("P_1", 5)])
        pa, pb = tmp_path / "a", tmp_path / "b"
        a.snapshot_save(pa)
        b.snapshot_save(pb)
        assert pa.read_bytes() == pb.read_bytes()


class TestSyncOutEdges:
    def test_sync_replaces_single_valued_edge(self):
        store = GraphStore()
        problem = store.upsert_node("Problem", "P_1", {"num_facilities": 5})
        small = store.upsert_node("ScaleCluster", "small")
        large = store.upsert_node("ScaleCluster", "large")
        store.sync_out_edges(problem, "BELONGS_TO_SCALE", [small])
        store.sync_out_edges(problem, "BELONGS_TO_SCALE", [large])
        names = [n.key for n in store.neighbors_out(problem, "BELONGS_TO_SCALE")]
        assert names == ["large"]
        assert store.edge_count("BELONGS_TO_SCALE") == 1


class TestConcurrency:
    def test_readers_never_observe_partial_batches(self):
        import threading

        store = GraphStore()
        batch_size = 40
        observed = set()
        stop = threading.Event()

        def reader():
            while not stop.is_set():
                observed.add(len(store.nodes_by_label("Problem")))

        def writer():
            for round_number in range(5):
                with store.batch():
                    for i in range(batch_size):
                        store.upsert_node(
                            "Problem", f"P_{round_number}_{i}", {"num_facilities": i + 1}
                        )

        threads = [threading.Thread(target=reader) for _ in range(3)]
        for t in threads:
            t.start()
        writer_thread = threading.Thread(target=writer)
        writer_thread.start()
        writer_thread.join()
        stop.set()
        for t in threads:
            t.join()
        # only whole-batch multiples are ever visible
        assert observed <= {k * batch_size for k in range(6)}

    def test_read_view_spans_multiple_queries_consistently(self):
        store = GraphStore()
        store.upsert_node("Problem", "P_1", {"num_facilities": 5})
        with store.read_view():
            first = store.stats().max_num_facilities
            second = store.stats().max_num_facilities
            assert first == second == 5

    def test_write_inside_read_is_refused(self):
        store = GraphStore()
        store.upsert_node("Problem", "P_1", {"num_facilities": 5})
        with store.read_view():
            with pytest.raises(RuntimeError):
                with store.batch():
                    pass
