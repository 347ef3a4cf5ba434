#!/usr/bin/env python3
"""Compare the graph-grounded recommender against the raw-table condition.

Both conditions run fully offline: the graph condition uses the evidence
analyst mock over the seeded knowledge base; the table condition hands the
same mock nothing but the corpus CSV, which reduces it to a global
frequency count. The accuracy gap this prints is the whole point of the
architecture.

    python scripts/run_benchmark.py [corpus.csv] [cases.json]
"""

import sys
from pathlib import Path

from flpadvisor import (
    BENCHMARK_CASES,
    SEED_CORPUS,
    EmbeddingIndex,
    EvidenceSummaryLlmProvider,
    FamilyTable,
    GraphStore,
    HashedBagOfWordsEmbedding,
    Recommender,
    Retriever,
    ScaleThresholds,
    data_path,
    load_corpus,
    parse_corpus,
)
from flpadvisor.evaluation import BASELINE_MODE, KGRAG_MODE, SuiteRunner, load_cases
from flpadvisor.providers import StaticLlmProvider


def print_report(report) -> None:
    print(f"\n=== {report.mode} ===")
    for case in report.cases:
        methods = ", ".join(case.methods) or "-"
        note = f"  [{case.error}]" if case.error else ""
        print(f"  {case.case_id}: accuracy={case.accuracy_bit} grounded={case.grounded}  {methods}{note}")
    print(f"  accuracy: {report.accuracy_fraction:.0%}")


def main() -> None:
    corpus = Path(sys.argv[1]) if len(sys.argv) > 1 else data_path(SEED_CORPUS)
    cases_file = Path(sys.argv[2]) if len(sys.argv) > 2 else data_path(BENCHMARK_CASES)

    corpus_text = corpus.read_text("utf-8")
    rows, _ = parse_corpus(corpus_text)
    store = GraphStore()
    load_corpus(rows, store, thresholds=ScaleThresholds(), families=FamilyTable.load())
    index = EmbeddingIndex(store, HashedBagOfWordsEmbedding())
    index.index_all()

    cases = load_cases(cases_file)
    judge = StaticLlmProvider("5")

    retriever = Retriever(store, index=index)
    kgrag = SuiteRunner(
        recommender=Recommender(retriever, EvidenceSummaryLlmProvider(), backoff_base=0),
        judge=judge,
    ).run_suite(cases, KGRAG_MODE)

    baseline = SuiteRunner(
        corpus_csv=corpus_text,
        baseline_llm=EvidenceSummaryLlmProvider(),
        judge=judge,
    ).run_suite(cases, BASELINE_MODE)

    print_report(kgrag)
    print_report(baseline)
    gap = kgrag.accuracy_fraction - baseline.accuracy_fraction
    print(f"\naccuracy gap (graph-grounded minus raw-table): {gap:+.0%}")


if __name__ == "__main__":
    main()
