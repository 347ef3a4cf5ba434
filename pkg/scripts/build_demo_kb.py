#!/usr/bin/env python3
"""Build a knowledge-base snapshot from a corpus CSV and print its statistics.

Defaults to the packaged seed corpus; point it at your own CSV to build a
real knowledge base.

    python scripts/build_demo_kb.py [corpus.csv] [snapshot-path]
"""

import sys
from pathlib import Path

from flpadvisor import (
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


def main() -> None:
    corpus = Path(sys.argv[1]) if len(sys.argv) > 1 else data_path(SEED_CORPUS)
    snapshot = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("demo_kb.snapshot")

    rows, row_errors = parse_corpus(corpus.read_bytes())
    store = GraphStore()
    report = load_corpus(rows, store, thresholds=ScaleThresholds(), families=FamilyTable.load())
    embedded = EmbeddingIndex(store, HashedBagOfWordsEmbedding()).index_all()
    store.snapshot_save(snapshot)

    stats = store.stats()
    print(f"corpus: {corpus}")
    print(f"rows parsed: {len(rows)}  row errors: {len(row_errors)}")
    for error in row_errors:
        print(f"  row {error.row}: {error.reason}")
    print(f"problems created: {report.problems_created}  solutions: {report.solutions_created}")
    print(f"problems embedded: {embedded}")
    print(f"nodes by label: {stats.node_count_by_label}")
    print(f"edges by type: {stats.edge_count_by_type}")
    print(f"max facilities: {stats.max_num_facilities}  top quartile: {stats.facility_top_quartile}")
    print(f"snapshot written: {snapshot}")


if __name__ == "__main__":
    main()
