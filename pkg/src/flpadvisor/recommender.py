"""Prompt compilation, response parsing, and the recommendation loop.

The evidence dossier is rendered into a strict prompt with fixed section
headers; the provider must answer in exactly two sections (RECOMMENDATION
and REASONING). Method names are extracted from the answer by matching the
known method vocabulary as whole words, longest name first, so compound
names like "BRKGA-LP" never leak a match for their substrings. A
recommendation is grounded only when every mentioned method occurs in the
retrieved evidence; an ungrounded answer earns exactly one corrective retry.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace

from .errors import EmptyEvidence, MalformedResponse, ProviderError
from .providers import LlmProvider
from .retrieval import EvidenceDossier, Retriever, UserQuery

PROMPT_ROLE = (
    "You are an expert analyst for facility layout optimization. Work strictly from the\n"
    "evidence in this prompt; do not use outside knowledge or untested assumptions.\n"
    "Recommend solution methods, parameters, a problem representation, and a constraint\n"
    "handling technique only when the evidence supports them."
)

PROMPT_OUTPUT_CONTRACT = (
    "Answer with exactly two sections:\n"
    "RECOMMENDATION: ranked method names from the evidence, best first.\n"
    "REASONING: a data-driven justification citing problem ids, counts, and costs\n"
    "from the evidence above."
)

CORRECTIVE_SUFFIX = (
    "\n\n## CORRECTION\n"
    "Your previous answer mentioned methods that are absent from the evidence above.\n"
    "Answer again and name only methods from the evidence.\n"
)

FALLBACK_BANNER = (
    "note: the query exceeds every known problem scale; rows below come from the"
    " large-scale fallback (top facility-count quartile, top-level scale cluster)."
)

_RECOMMENDATION_HEADER = re.compile(r"recommendation\s*:", re.IGNORECASE)
_REASONING_HEADER = re.compile(r"reasoning\s*:", re.IGNORECASE)


@dataclass(frozen=True)
class Recommendation:
    """Parsed and validated two-section answer."""

    methods: tuple[str, ...]  # display names, ranked by first mention
    method_keys: tuple[str, ...]
    parameters: dict[str, str]  # method display name -> parameter text
    representation: str | None
    constraint_handling: str | None
    reasoning: str
    cited_problem_ids: tuple[str, ...]
    grounded: bool
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Prompt compilation
# ---------------------------------------------------------------------------


def _fmt_query(query: UserQuery) -> str:
    return "\n".join(
        [
            f"num_facilities: {query.num_facilities if query.num_facilities is not None else '(none)'}",
            f"objectives: [{', '.join(query.objectives) or '(none)'}]",
            f"constraints: [{', '.join(query.constraints) or '(none)'}]",
            f"representation: {query.representation or '(none)'}",
            f"free_text: {query.free_text or '(none)'}",
        ]
    )


def _fmt_graph_rows(dossier: EvidenceDossier) -> str:
    if not dossier.graph_rows:
        return "(none)"
    lines = []
    if dossier.used_fallback:
        lines.append(FALLBACK_BANNER)
    for i, row in enumerate(dossier.graph_rows, 1):
        lines.append(
            f"{i}. problem={row.problem_id} n={row.num_facilities}"
            f" | method={row.method}"
            f" | objective_score={row.objective_score} constraint_score={row.constraint_score}"
            f" facility_distance={row.facility_distance} cost={row.cost!r} time_sec={row.time_sec!r}"
            f" | objectives=[{', '.join(row.objective_names)}]"
            f" constraints=[{', '.join(row.constraint_names)}]"
            f" representation={row.representation or '(none)'}"
            f" constraint_handling={row.constraint_handling or '(none)'}"
            f" | parameters={row.model_parameters or '(none)'}"
            f" | source={row.source or '(none)'}"
        )
    return "\n".join(lines)


def _fmt_vector_matches(dossier: EvidenceDossier) -> str:
    if not dossier.vector_matches:
        return "(none)"
    lines = []
    for i, match in enumerate(dossier.vector_matches, 1):
        methods = "; ".join(dossier.vector_methods.get(match.problem_id, ()))
        lines.append(
            f"{i}. problem={match.problem_id} similarity={match.similarity:.6f}"
            f" | methods=[{methods}]"
            f" | description={match.description_text}"
        )
    return "\n".join(lines)


def _fmt_trends(dossier: EvidenceDossier) -> str:
    if not dossier.trends:
        return "(none)"
    lines = []
    for trend in dossier.trends:
        entries = " ; ".join(
            f"{j}) method={e.method} | count={e.count} mean_cost={e.mean_cost!r}"
            for j, e in enumerate(trend.entries, 1)
        )
        lines.append(f"- {trend.cluster_kind} cluster '{trend.cluster_label}': {entries}")
    return "\n".join(lines)


def compile_prompt(dossier: EvidenceDossier) -> str:
    """Render the dossier into the strict prompt template.

    Section headers are fixed and always present; empty channels render as
    "(none)". Identical dossiers produce byte-identical prompts.
    """
    return "\n".join(
        [
            "## ROLE",
            PROMPT_ROLE,
            "",
            "## USER QUERY",
            _fmt_query(dossier.query_echo),
            "",
            "## GRAPH EVIDENCE",
            _fmt_graph_rows(dossier),
            "",
            "## VECTOR EVIDENCE",
            _fmt_vector_matches(dossier),
            "",
            "## CLUSTER TRENDS",
            _fmt_trends(dossier),
            "",
            "## OUTPUT FORMAT",
            PROMPT_OUTPUT_CONTRACT,
        ]
    )


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------


def _find_known_names(text: str, vocabulary: dict[str, str]) -> list[str]:
    """Whole-word vocabulary matches, longest name first so compound names
    consume their span before any substring can match. Returns canonical
    keys ordered by first mention."""
    lowered = text.lower()
    consumed = [False] * len(lowered)
    hits: list[tuple[int, str]] = []
    for key, display in sorted(vocabulary.items(), key=lambda kv: (-len(kv[1]), kv[0])):
        needle = display.lower()
        if not needle:
            continue
        start = 0
        while True:
            idx = lowered.find(needle, start)
            if idx == -1:
                break
            end = idx + len(needle)
            boundary_ok = (idx == 0 or not lowered[idx - 1].isalnum()) and (
                end >= len(lowered) or not lowered[end].isalnum()
            )
            if boundary_ok and not any(consumed[idx:end]):
                consumed[idx:end] = [True] * (end - idx)
                hits.append((idx, key))
            start = idx + 1
    hits.sort()
    ordered: list[str] = []
    for _, key in hits:
        if key not in ordered:
            ordered.append(key)
    return ordered


def render_two_section(methods: list[str] | tuple[str, ...], reasoning: str) -> str:
    """Format a recommendation into the required two-section text."""
    return f"RECOMMENDATION: {', '.join(methods)}\nREASONING: {reasoning}"


def parse_response(raw: str, dossier: EvidenceDossier) -> Recommendation:
    """Split the two sections, extract known methods, and check grounding.

    Raises MalformedResponse when a section header is missing, the reasoning
    is empty, or no known method is mentioned. ``grounded`` is true exactly
    when every mentioned method occurs in the dossier's evidence.
    """
    if not raw.strip():
        raise MalformedResponse("empty response")
    rec_match = _RECOMMENDATION_HEADER.search(raw)
    rsn_match = _REASONING_HEADER.search(raw)
    if rec_match is None or rsn_match is None:
        missing = "RECOMMENDATION" if rec_match is None else "REASONING"
        raise MalformedResponse(f"response is missing the {missing}: header")

    if rec_match.start() < rsn_match.start():
        rec_section = raw[rec_match.end() : rsn_match.start()]
        reasoning = raw[rsn_match.end() :]
    else:
        reasoning = raw[rsn_match.end() : rec_match.start()]
        rec_section = raw[rec_match.end() :]
    reasoning = reasoning.strip()
    if not reasoning:
        raise MalformedResponse("reasoning section is empty")

    method_keys = _find_known_names(rec_section, dossier.method_catalog)
    if not method_keys:
        raise MalformedResponse("no known method is mentioned in the recommendation section")
    grounded = all(key in dossier.evidence_methods for key in method_keys)

    parameters: dict[str, str] = {}
    representation: str | None = None
    constraint_handling: str | None = None
    for key in method_keys:
        for row in dossier.graph_rows:
            if row.method_key == key:
                display = dossier.method_catalog[key]
                if row.model_parameters and display not in parameters:
                    parameters[display] = row.model_parameters
                if representation is None and row.representation:
                    representation = row.representation
                if constraint_handling is None and row.constraint_handling:
                    constraint_handling = row.constraint_handling
                break

    known_problem_ids = {row.problem_id for row in dossier.graph_rows}
    known_problem_ids.update(m.problem_id for m in dossier.vector_matches)
    cited = _find_known_names(raw, {pid: pid for pid in known_problem_ids})

    return Recommendation(
        methods=tuple(dossier.method_catalog[k] for k in method_keys),
        method_keys=tuple(method_keys),
        parameters=parameters,
        representation=representation,
        constraint_handling=constraint_handling,
        reasoning=reasoning,
        cited_problem_ids=tuple(cited),
        grounded=grounded,
    )


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


class Recommender:
    """Retrieve evidence, prompt the provider, parse, and enforce grounding."""

    def __init__(
        self,
        retriever: Retriever,
        llm: LlmProvider,
        *,
        transport_retries: int = 2,
        backoff_base: float = 0.1,
    ):
        self.retriever = retriever
        self.llm = llm
        self.transport_retries = transport_retries
        self.backoff_base = backoff_base

    def _complete(self, prompt: str) -> str:
        last: ProviderError | None = None
        for attempt in range(self.transport_retries + 1):
            try:
                return self.llm.complete(prompt)
            except ProviderError as exc:
                last = exc
                if attempt < self.transport_retries and self.backoff_base > 0:
                    time.sleep(self.backoff_base * (2**attempt))
        assert last is not None
        raise last

    def recommend(self, query: UserQuery) -> tuple[Recommendation, EvidenceDossier]:
        """Full loop: evidence, prompt, completion, parse, grounding retry.

        An answer that stays ungrounded after the single corrective retry is
        returned with grounded=False and a warning rather than failing.
        """
        dossier = self.retriever.retrieve_evidence(query)
        if dossier.is_empty():
            raise EmptyEvidence("all retrieval channels returned nothing")
        prompt = compile_prompt(dossier)
        recommendation = parse_response(self._complete(prompt), dossier)
        if recommendation.grounded:
            return recommendation, dossier
        retried = parse_response(self._complete(prompt + CORRECTIVE_SUFFIX), dossier)
        if not retried.grounded:
            retried = replace(
                retried,
                warnings=retried.warnings
                + ("recommendation still names methods outside the evidence after one corrective retry",),
            )
        return retried, dossier
