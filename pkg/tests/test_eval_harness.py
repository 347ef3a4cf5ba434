import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flpadvisor import (
    EvidenceSummaryLlmProvider,
    MalformedResponse,
    Recommender,
    Retriever,
    ScriptedLlmProvider,
    StaticLlmProvider,
)
from flpadvisor.evaluation import (
    BASELINE_MODE,
    KGRAG_MODE,
    SuiteRunner,
    judge_reasoning,
    load_cases,
    score_accuracy,
    write_report,
)


class TestScoreAccuracy:
    def test_superset_counts_as_match(self):
        assert score_accuracy(["CRO-SL", "BRKGA"], ["CRO-SL"]) == 1

    def test_disjoint_is_mismatch(self):
        assert score_accuracy(["ACO-FBS"], ["HSA"]) == 0

    def test_identical_singletons(self):
        assert score_accuracy(["GA"], ["GA"]) == 1

    def test_canonical_comparison(self):
        assert score_accuracy(["brkga-lp"], ["BRKGA-LP"]) == 1

    def test_empty_lists_rejected(self):
        with pytest.raises(ValueError):
            score_accuracy([], ["GA"])

    @given(
        st.lists(st.sampled_from(["GA", "PSO", "HSA", "SA"]), min_size=1, max_size=6),
        st.lists(st.sampled_from(["GA", "PSO", "HSA", "SA"]), min_size=1, max_size=6),
    )
    @settings(max_examples=60, deadline=None)
    def test_symmetric_and_duplicate_insensitive(self, a, b):
        assert score_accuracy(a, b) == score_accuracy(b, a)
        assert score_accuracy(a, b) == score_accuracy(a + a, list(reversed(b)))


class TestJudgeReasoning:
    def test_scripted_five(self):
        score = judge_reasoning("GA", "cited three evidence rows", "rows: 3", StaticLlmProvider("5"))
        assert score == 5

    def test_no_digit_raises_after_retry(self):
        judge = StaticLlmProvider("excellent")
        with pytest.raises(MalformedResponse):
            judge_reasoning("GA", "text", "summary", judge)
        assert len(judge.prompts) == 2  # one retry with a stricter instruction

    def test_digit_recovered_on_retry(self):
        judge = ScriptedLlmProvider(script=["superb", "I rate it 4"])
        assert judge_reasoning("GA", "text", "summary", judge) == 4

    def test_rubric_embedded_in_prompt(self):
        judge = StaticLlmProvider("3")
        judge_reasoning("GA", "text", "summary", judge)
        prompt = judge.prompts[0]
        for level in ("1 (Poor)", "2 (Weak)", "3 (Acceptable)", "4 (Good)", "5 (Excellent)"):
            assert level in prompt


class TestRunSuite:
    def test_kgrag_on_seeded_store_is_five_of_five(self, seed_store, seed_index, cases_path):
        retriever = Retriever(seed_store, index=seed_index)
        runner = SuiteRunner(
            recommender=Recommender(retriever, EvidenceSummaryLlmProvider(), backoff_base=0),
            judge=StaticLlmProvider("5"),
        )
        report = runner.run_suite(load_cases(cases_path), KGRAG_MODE)
        assert report.accuracy_fraction == 1.0
        assert all(case.accuracy_bit == 1 for case in report.cases)
        assert all(case.grounded for case in report.cases)
        assert report.mean_reasoning == 5.0

    def test_baseline_scripted_mismatch_pattern(self, seed_csv_text, cases_path):
        responses = [
            "RECOMMENDATION: ACO-FBS\nREASONING: frequent in the table.",
            "RECOMMENDATION: ACO-FBS\nREASONING: seems versatile.",
            "RECOMMENDATION: BRKGA-LP\nREASONING: matches the 30-facility rows.",
            "RECOMMENDATION: ACO-FBS\nREASONING: common pick.",
            "RECOMMENDATION: PROP1\nREASONING: a simple default.",
        ]
        runner = SuiteRunner(
            corpus_csv=seed_csv_text,
            baseline_llm=ScriptedLlmProvider(script=responses),
            judge=StaticLlmProvider("3"),
        )
        report = runner.run_suite(load_cases(cases_path), BASELINE_MODE)
        assert [case.accuracy_bit for case in report.cases] == [0, 0, 1, 0, 0]
        assert report.accuracy_fraction == pytest.approx(0.2)

    def test_empty_case_list(self, seed_store, seed_index):
        retriever = Retriever(seed_store, index=seed_index)
        runner = SuiteRunner(
            recommender=Recommender(retriever, EvidenceSummaryLlmProvider(), backoff_base=0)
        )
        report = runner.run_suite([], KGRAG_MODE)
        assert report.accuracy_fraction == 0.0
        assert report.mean_reasoning is None
        assert report.cases == ()

    def test_per_case_errors_recorded_not_fatal(self, seed_store, seed_index, cases_path):
        retriever = Retriever(seed_store, index=seed_index)
        # script runs dry after the first case -> remaining cases error out
        runner = SuiteRunner(
            recommender=Recommender(
                retriever,
                ScriptedLlmProvider(script=["RECOMMENDATION: CRO-SL\nREASONING: P_10A."]),
                backoff_base=0,
            ),
        )
        report = runner.run_suite(load_cases(cases_path), KGRAG_MODE)
        assert len(report.cases) == 5
        assert report.cases[0].error is None
        assert all(case.error is not None for case in report.cases[1:])

    def test_deterministic_under_scripted_providers(self, seed_store, seed_index, cases_path):
        def run():
            retriever = Retriever(seed_store, index=seed_index)
            runner = SuiteRunner(
                recommender=Recommender(retriever, EvidenceSummaryLlmProvider(), backoff_base=0),
                judge=StaticLlmProvider("5"),
            )
            return runner.run_suite(load_cases(cases_path), KGRAG_MODE)

        assert run() == run()

    def test_report_written_next_to_cases(self, seed_store, seed_index, cases_path, tmp_path):
        local_cases = tmp_path / "cases.json"
        local_cases.write_text(cases_path.read_text("utf-8"), "utf-8")
        retriever = Retriever(seed_store, index=seed_index)
        runner = SuiteRunner(
            recommender=Recommender(retriever, EvidenceSummaryLlmProvider(), backoff_base=0)
        )
        report = runner.run_suite(load_cases(local_cases), KGRAG_MODE)
        out = write_report(report, local_cases)
        assert out.parent == tmp_path
        data = json.loads(out.read_text("utf-8"))
        assert data["mode"] == "kgrag"
        assert len(data["cases"]) == 5
