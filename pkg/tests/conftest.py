import pytest

from flpadvisor import (
    BENCHMARK_CASES,
    SEED_CORPUS,
    EmbeddingIndex,
    FamilyTable,
    GraphStore,
    HashedBagOfWordsEmbedding,
    ScaleThresholds,
    data_path,
    load_corpus,
    parse_corpus,
)
from flpadvisor.ingestion import CorpusRow


@pytest.fixture(scope="session")
def thresholds() -> ScaleThresholds:
    return ScaleThresholds()


@pytest.fixture(scope="session")
def families() -> FamilyTable:
    return FamilyTable.load()


@pytest.fixture(scope="session")
def seed_csv_text() -> str:
    return data_path(SEED_CORPUS).read_text("utf-8")


@pytest.fixture(scope="session")
def cases_path():
    return data_path(BENCHMARK_CASES)


def build_store(csv_text: str, thresholds: ScaleThresholds, families: FamilyTable) -> GraphStore:
    rows, errors = parse_corpus(csv_text)
    assert not errors, errors
    store = GraphStore()
    load_corpus(rows, store, thresholds=thresholds, families=families)
    return store


@pytest.fixture()
def seed_store(seed_csv_text, thresholds, families) -> GraphStore:
    return build_store(seed_csv_text, thresholds, families)


@pytest.fixture()
def seed_index(seed_store) -> EmbeddingIndex:
    index = EmbeddingIndex(seed_store, HashedBagOfWordsEmbedding())
    index.index_all()
    return index


def assert_same_ranking(got, oracle: dict, tol: float = 1e-9) -> None:
    """Ranking equality under float noise: similarities agree pairwise within
    ``tol`` and the orders agree as equivalence classes of tied similarity
    (mathematical ties differ in the last ulp between numpy and pure-python
    summation, so strict total-order comparison is ill-posed)."""
    got_pairs = [(m.problem_id, m.similarity) for m in got]
    for pid, sim in got_pairs:
        assert abs(sim - oracle[pid]) <= tol, (pid, sim, oracle[pid])
    sims = [sim for _, sim in got_pairs]
    assert all(a >= b - tol for a, b in zip(sims, sims[1:])), "not descending"

    def groups(pairs):
        grouped = []
        for pid, sim in pairs:
            if grouped and abs(grouped[-1][0] - sim) <= tol:
                grouped[-1][1].add(pid)
            else:
                grouped.append((sim, {pid}))
        return [frozenset(g) for _, g in grouped]

    oracle_pairs = sorted(oracle.items(), key=lambda kv: (-kv[1], kv[0]))
    assert groups(got_pairs) == groups(oracle_pairs)


def corpus_row(
    problem_id: str = "P_T",
    num_facilities: int = 10,
    objective: str = "min material handling cost",
    constraints: str = "non-overlapping",
    method: str = "GA",
    cost: float = 100.0,
    time_sec: float = 10.0,
    **overrides,
) -> CorpusRow:
    """Compact factory for valid corpus rows in tests."""
    values = dict(
        problem_id=problem_id,
        num_facilities=num_facilities,
        floor_w=30.0,
        floor_h=90.0,
        problem_representation="continuous space",
        facility_dimension_data="fixed dim fixed area",
        objective=objective,
        constraints=constraints,
        constraint_handling="shapely intersection",
        method=method,
        model_parameters="pop_size=50;n_gen=200",
        cost=cost,
        time_sec=time_sec,
        source="synthetic fixture",
    )
    values.update(overrides)
    return CorpusRow(**values)
