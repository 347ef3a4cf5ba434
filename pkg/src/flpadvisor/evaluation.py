"""Evaluation harness: accuracy scoring, judged reasoning quality, suite runner.

Two conditions share one parser and one scorer so the comparison is
symmetric: the knowledge-graph condition calls the full recommendation
loop, while the baseline condition hands the provider the raw corpus CSV as
its only knowledge and demands the same two-section answer. Accuracy is the
binary intersection test against ground truth; reasoning quality is a 1-5
score assigned by a separate judge provider against a fixed rubric.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import FlpAdvisorError, MalformedResponse
from .ingestion import canonical_name, parse_corpus
from .providers import LlmProvider
from .recommender import PROMPT_OUTPUT_CONTRACT, Recommender, parse_response
from .retrieval import EvidenceDossier, UserQuery

KGRAG_MODE = "kgrag"
BASELINE_MODE = "baseline"

JUDGE_RUBRIC = (
    "1 (Poor): Irrelevant or ambiguous explanation.\n"
    "2 (Weak): Plausible but not specific.\n"
    "3 (Acceptable): Reasonable but unsupported by cited evidence.\n"
    "4 (Good): Applies to some numbers, but the analysis is superficial.\n"
    "5 (Excellent): Combines several correct, cited evidence points to construct a firm,"
    " evidence-based conclusion."
)

BASELINE_ROLE = (
    "You are an expert analyst for facility layout optimization. Your only knowledge\n"
    "source is the raw CSV data table below. Use it to answer the query."
)

_SCORE_RE = re.compile(r"\b([1-5])\b")


@dataclass(frozen=True)
class TestCase:
    """One evaluation case: a query plus the acceptable method names."""

    id: str
    query: dict[str, Any]
    ground_truth: tuple[str, ...]


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    methods: tuple[str, ...]
    grounded: bool
    accuracy_bit: int
    reasoning_score: int | None
    error: str | None = None


@dataclass(frozen=True)
class EvalReport:
    mode: str
    cases: tuple[CaseResult, ...]
    accuracy_fraction: float
    mean_reasoning: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "cases": [
                {
                    "case_id": c.case_id,
                    "methods": list(c.methods),
                    "grounded": c.grounded,
                    "accuracy_bit": c.accuracy_bit,
                    "reasoning_score": c.reasoning_score,
                    "error": c.error,
                }
                for c in self.cases
            ],
            "accuracy_fraction": self.accuracy_fraction,
            "mean_reasoning": self.mean_reasoning,
        }


def load_cases(path: str | Path) -> list[TestCase]:
    data = json.loads(Path(path).read_text("utf-8"))
    return [
        TestCase(
            id=str(entry["id"]),
            query=dict(entry["query"]),
            ground_truth=tuple(entry["ground_truth"]),
        )
        for entry in data
    ]


def score_accuracy(recommended: list[str] | tuple[str, ...], ground_truth: list[str] | tuple[str, ...]) -> int:
    """1 when the recommended set intersects the ground-truth set, else 0.

    Comparison is on canonical names, so order and duplicates are irrelevant.
    """
    if not recommended or not ground_truth:
        raise ValueError("both method lists must be non-empty")
    recommended_set = {canonical_name(m) for m in recommended}
    truth_set = {canonical_name(m) for m in ground_truth}
    return 1 if recommended_set & truth_set else 0


def judge_reasoning(
    recommendation_text: str,
    reasoning_text: str,
    dossier_summary: str,
    judge: LlmProvider,
) -> int:
    """Score reasoning quality 1-5 with a judge provider and a fixed rubric.

    The judge must answer with a single integer; one retry with a stricter
    instruction, then MalformedResponse.
    """
    prompt = (
        "You are an impartial judge of recommendation quality. Score how well the\n"
        "reasoning below is grounded in the supplied evidence, on this scale:\n"
        f"{JUDGE_RUBRIC}\n\n"
        f"EVIDENCE SUMMARY:\n{dossier_summary}\n\n"
        f"RECOMMENDATION:\n{recommendation_text}\n\n"
        f"REASONING:\n{reasoning_text}\n\n"
        "Respond with a single integer from 1 to 5."
    )
    for attempt in range(2):
        response = judge.complete(
            prompt if attempt == 0 else prompt + "\n\nAnswer with ONLY one digit, 1-5."
        )
        match = _SCORE_RE.search(response)
        if match:
            return int(match.group(1))
    raise MalformedResponse("judge did not produce an integer score between 1 and 5")


def summarize_dossier(dossier: EvidenceDossier) -> str:
    """Compact evidence digest handed to the judge."""
    lines = [
        f"graph rows: {len(dossier.graph_rows)} (fallback={dossier.used_fallback})",
        f"vector matches: {len(dossier.vector_matches)}",
    ]
    for row in dossier.graph_rows:
        lines.append(
            f"  {row.problem_id}: method={row.method} cost={row.cost!r} time_sec={row.time_sec!r}"
        )
    for trend in dossier.trends:
        entries = ", ".join(f"{e.method} x{e.count}" for e in trend.entries)
        lines.append(f"  {trend.cluster_kind} cluster '{trend.cluster_label}': {entries}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Baseline condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _BaselineVocabulary:
    """Duck-typed stand-in for the dossier in parse_response: the whole
    corpus is the baseline's evidence, so its vocabulary is every method
    named in the CSV."""

    method_catalog: dict[str, str]
    evidence_methods: frozenset[str]
    graph_rows: tuple = ()
    vector_matches: tuple = ()


def baseline_vocabulary(corpus_csv: str) -> _BaselineVocabulary:
    rows, _ = parse_corpus(corpus_csv)
    catalog: dict[str, str] = {}
    for row in rows:
        key = canonical_name(row.method)
        catalog.setdefault(key, re.sub(r"\s+", " ", row.method.strip()))
    return _BaselineVocabulary(method_catalog=catalog, evidence_methods=frozenset(catalog))


def _render_case_query(query: dict[str, Any]) -> str:
    parts = []
    if query.get("num_facilities") is not None:
        parts.append(f"number of facilities = {query['num_facilities']}")
    parts.append(f"objectives = {', '.join(query.get('objectives') or []) or 'None'}")
    parts.append(f"constraints = {', '.join(query.get('constraints') or []) or 'None'}")
    if query.get("representation"):
        parts.append(f"representation = {query['representation']}")
    if query.get("free_text"):
        parts.append(f"description: {query['free_text']}")
    return "; ".join(parts)


def compile_baseline_prompt(corpus_csv: str, query: dict[str, Any]) -> str:
    return "\n".join(
        [
            "## ROLE",
            BASELINE_ROLE,
            "",
            "## DATA TABLE (CSV)",
            corpus_csv.strip(),
            "",
            "## USER QUERY",
            _render_case_query(query),
            "",
            "## OUTPUT FORMAT",
            PROMPT_OUTPUT_CONTRACT,
        ]
    )


# ---------------------------------------------------------------------------
# Suite runner
# ---------------------------------------------------------------------------


@dataclass
class SuiteRunner:
    """Runs a case list in either condition and aggregates both metrics."""

    recommender: Recommender | None = None
    corpus_csv: str | None = None
    baseline_llm: LlmProvider | None = None
    judge: LlmProvider | None = None

    def _run_kgrag_case(self, case: TestCase) -> CaseResult:
        assert self.recommender is not None, "kgrag mode requires a recommender"
        retriever = self.recommender.retriever
        query: UserQuery = retriever.normalize_query(
            num_facilities=case.query.get("num_facilities"),
            objectives=case.query.get("objectives"),
            constraints=case.query.get("constraints"),
            representation=case.query.get("representation"),
            free_text=case.query.get("free_text"),
        )
        recommendation, dossier = self.recommender.recommend(query)
        score = None
        if self.judge is not None:
            score = judge_reasoning(
                ", ".join(recommendation.methods),
                recommendation.reasoning,
                summarize_dossier(dossier),
                self.judge,
            )
        return CaseResult(
            case_id=case.id,
            methods=recommendation.methods,
            grounded=recommendation.grounded,
            accuracy_bit=score_accuracy(recommendation.methods, case.ground_truth),
            reasoning_score=score,
        )

    def _run_baseline_case(self, case: TestCase) -> CaseResult:
        assert self.corpus_csv is not None and self.baseline_llm is not None, (
            "baseline mode requires a corpus CSV and a provider"
        )
        vocabulary = baseline_vocabulary(self.corpus_csv)
        prompt = compile_baseline_prompt(self.corpus_csv, case.query)
        recommendation = parse_response(self.baseline_llm.complete(prompt), vocabulary)
        score = None
        if self.judge is not None:
            score = judge_reasoning(
                ", ".join(recommendation.methods),
                recommendation.reasoning,
                "the full corpus CSV",
                self.judge,
            )
        return CaseResult(
            case_id=case.id,
            methods=recommendation.methods,
            grounded=recommendation.grounded,
            accuracy_bit=score_accuracy(recommendation.methods, case.ground_truth),
            reasoning_score=score,
        )

    def run_suite(self, cases: list[TestCase], mode: str) -> EvalReport:
        """Run every case; per-case failures are recorded, never fatal."""
        if mode not in (KGRAG_MODE, BASELINE_MODE):
            raise ValueError(f"unknown mode {mode!r}")
        results: list[CaseResult] = []
        for case in cases:
            try:
                if mode == KGRAG_MODE:
                    results.append(self._run_kgrag_case(case))
                else:
                    results.append(self._run_baseline_case(case))
            except (FlpAdvisorError, ValueError) as exc:
                results.append(
                    CaseResult(
                        case_id=case.id,
                        methods=(),
                        grounded=False,
                        accuracy_bit=0,
                        reasoning_score=None,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
        accuracy = sum(r.accuracy_bit for r in results) / len(results) if results else 0.0
        scores = [r.reasoning_score for r in results if r.reasoning_score is not None]
        mean_reasoning = sum(scores) / len(scores) if scores else None
        return EvalReport(
            mode=mode,
            cases=tuple(results),
            accuracy_fraction=accuracy,
            mean_reasoning=mean_reasoning,
        )


def write_report(report: EvalReport, cases_path: str | Path) -> Path:
    """Write the JSON report next to the cases file; returns the path."""
    cases_path = Path(cases_path)
    out = cases_path.with_name(f"{cases_path.stem}.{report.mode}.report.json")
    out.write_text(json.dumps(report.to_dict(), indent=2) + "\n", "utf-8")
    return out
