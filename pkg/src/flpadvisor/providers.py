"""Pluggable embedding and language-model providers.

Every provider has a deterministic offline stand-in so the whole stack runs
and tests without network access. Remote providers speak a minimal JSON
contract: POST {"text": ...} -> {"embedding": [...]} for embeddings and
POST {"prompt": ...} -> {"text": ...} for completions.
"""

from __future__ import annotations

import hashlib
import re
import zlib
from abc import ABC, abstractmethod
from typing import Callable, Mapping, Sequence

import requests

from .errors import ProviderError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmbeddingProvider(ABC):
    """Maps text to a fixed-dimension real vector, deterministically."""

    @abstractmethod
    def embed(self, text: str) -> list[float]: ...

    @abstractmethod
    def dimension(self) -> int: ...


class LlmProvider(ABC):
    """Completes a prompt into a text response."""

    @abstractmethod
    def complete(self, prompt: str) -> str: ...


# ---------------------------------------------------------------------------
# Offline embedding
# ---------------------------------------------------------------------------


class HashedBagOfWordsEmbedding(EmbeddingProvider):
    """Deterministic offline embedding.

    Tokenizes to lower-case alphanumeric words, hashes each token to one of
    ``dim`` buckets (crc32, stable across processes), accumulates counts, and
    L2-normalizes. Similar text lands on similar vectors, coarsely. Text with
    no tokens embeds to the zero vector; callers must reject it.
    """

    def __init__(self, dim: int = 64):
        if dim < 8:
            raise ValueError("embedding dimension must be >= 8")
        self._dim = dim

    def dimension(self) -> int:
        return self._dim

    def embed(self, text: str) -> list[float]:
        vector = [0.0] * self._dim
        for token in _TOKEN_RE.findall(text.lower()):
            vector[zlib.crc32(token.encode("utf-8")) % self._dim] += 1.0
        norm = sum(v * v for v in vector) ** 0.5
        if norm == 0.0:
            return vector
        return [v / norm for v in vector]


class RemoteEmbeddingProvider(EmbeddingProvider):
    """HTTP embedding endpoint; dimension is discovered on first use."""

    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 30.0):
        self._endpoint = endpoint
        self._api_key = api_key
        self._timeout = timeout
        self._dim: int | None = None

    def dimension(self) -> int:
        if self._dim is None:
            self.embed("dimension probe")
        assert self._dim is not None
        return self._dim

    def embed(self, text: str) -> list[float]:
        headers = {"Authorization": f"Bearer {self._api_key}"} if self._api_key else {}
        try:
            response = requests.post(
                self._endpoint, json={"text": text}, headers=headers, timeout=self._timeout
            )
            response.raise_for_status()
            vector = response.json()["embedding"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        if not isinstance(vector, list) or not all(isinstance(v, (int, float)) for v in vector):
            raise ProviderError("embedding response is not a numeric vector")
        if self._dim is None:
            self._dim = len(vector)
        elif len(vector) != self._dim:
            raise ProviderError(f"embedding dimension changed: {len(vector)} != {self._dim}")
        return [float(v) for v in vector]


# ---------------------------------------------------------------------------
# Scripted / offline language models
# ---------------------------------------------------------------------------


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ScriptedLlmProvider(LlmProvider):
    """Canned responses for tests: either a script consumed in order, a
    prompt-hash lookup table, or a callable. Records every prompt it sees."""

    def __init__(
        self,
        script: Sequence[str] | None = None,
        by_hash: Mapping[str, str] | None = None,
        fn: Callable[[str], str] | None = None,
    ):
        if sum(x is not None for x in (script, by_hash, fn)) != 1:
            raise ValueError("provide exactly one of script, by_hash, fn")
        self._script = list(script) if script is not None else None
        self._by_hash = dict(by_hash) if by_hash is not None else None
        self._fn = fn
        self._cursor = 0
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if self._fn is not None:
            return self._fn(prompt)
        if self._by_hash is not None:
            key = prompt_hash(prompt)
            if key not in self._by_hash:
                raise ProviderError(f"no scripted response for prompt hash {key[:12]}")
            return self._by_hash[key]
        assert self._script is not None
        if self._cursor >= len(self._script):
            raise ProviderError("scripted responses exhausted")
        response = self._script[self._cursor]
        self._cursor += 1
        return response


class StaticLlmProvider(LlmProvider):
    """Always returns the same text; handy as a judge stub."""

    def __init__(self, text: str):
        self._text = text
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        return self._text


_GRAPH_METHOD_RE = re.compile(r"\| method=(.+?) \|")
_GRAPH_PROBLEM_RE = re.compile(r"^\d+\. problem=(\S+) ")
_TREND_METHOD_RE = re.compile(r"method=(.+?) \| count=")
_VECTOR_METHODS_RE = re.compile(r"methods=\[([^\]]*)\]")


class EvidenceSummaryLlmProvider(LlmProvider):
    """Offline analyst: reads the evidence sections of the prompt it is given
    and answers with the top-ranked methods plus a reasoning paragraph that
    cites problem ids and trend counts. Deterministic, and grounded by
    construction because it only ever names methods present in the prompt.
    """

    def __init__(self, max_methods: int = 2):
        self._max_methods = max_methods

    def complete(self, prompt: str) -> str:
        table_section = _section(prompt, "## DATA TABLE (CSV)")
        if table_section.strip():
            return self._complete_from_table(table_section)
        graph_section = _section(prompt, "## GRAPH EVIDENCE")
        vector_section = _section(prompt, "## VECTOR EVIDENCE")
        trends_section = _section(prompt, "## CLUSTER TRENDS")

        methods: list[str] = []
        problems: list[str] = []
        for line in graph_section.splitlines():
            m = _GRAPH_METHOD_RE.search(line)
            p = _GRAPH_PROBLEM_RE.match(line.strip())
            if m and m.group(1) not in methods:
                methods.append(m.group(1))
            if p and p.group(1) not in problems:
                problems.append(p.group(1))
        if not methods:
            for line in trends_section.splitlines():
                for name in _TREND_METHOD_RE.findall(line):
                    if name not in methods:
                        methods.append(name)
        if not methods:
            for line in vector_section.splitlines():
                for group in _VECTOR_METHODS_RE.findall(line):
                    for name in group.split("; "):
                        if name and name not in methods:
                            methods.append(name)

        chosen = methods[: self._max_methods]
        if not chosen:
            return (
                "RECOMMENDATION: no method is supported by the retrieved evidence.\n"
                "REASONING: every evidence channel is empty."
            )
        cited = ", ".join(problems[:3]) if problems else "the aggregated cluster trends"
        trend_note = ""
        first_trend = next((ln for ln in trends_section.splitlines() if ln.strip().startswith("-")), "")
        if first_trend:
            trend_note = f" Cluster analysis agrees: {first_trend.strip().lstrip('- ')}"
        return (
            f"RECOMMENDATION: {', '.join(chosen)}\n"
            f"REASONING: The highest-ranked evidence rows ({cited}) show "
            f"{chosen[0]} solving the closest matching problems at the best cost, "
            f"so it leads the recommendation.{trend_note}"
        )

    def _complete_from_table(self, table_text: str) -> str:
        """Raw-table condition: a shallow global frequency count of the method
        column, blind to the query - the failure mode a flat-file reader has."""
        import csv
        import io

        reader = csv.reader(io.StringIO(table_text.strip()))
        try:
            header = next(reader)
        except StopIteration:
            return "RECOMMENDATION: (empty table)\nREASONING: the table has no rows."
        try:
            method_column = [h.strip().lower() for h in header].index("method")
        except ValueError:
            return "RECOMMENDATION: (no method column)\nREASONING: the table is unreadable."
        counts: dict[str, int] = {}
        for cells in reader:
            if len(cells) > method_column and cells[method_column].strip():
                name = cells[method_column].strip()
                counts[name] = counts.get(name, 0) + 1
        if not counts:
            return "RECOMMENDATION: (empty table)\nREASONING: the table has no rows."
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        chosen = [name for name, _ in ranked[: self._max_methods]]
        return (
            f"RECOMMENDATION: {', '.join(chosen)}\n"
            f"REASONING: {chosen[0]} appears most often in the table"
            f" ({ranked[0][1]} rows), so it looks like a safe pick overall."
        )


def _section(prompt: str, header: str) -> str:
    start = prompt.find(header)
    if start == -1:
        return ""
    start += len(header)
    end = prompt.find("\n## ", start)
    return prompt[start:end] if end != -1 else prompt[start:]


class RemoteLlmProvider(LlmProvider):
    """HTTP completion endpoint."""

    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 60.0):
        self._endpoint = endpoint
        self._api_key = api_key
        self._timeout = timeout

    def complete(self, prompt: str) -> str:
        headers = {"Authorization": f"Bearer {self._api_key}"} if self._api_key else {}
        try:
            response = requests.post(
                self._endpoint, json={"prompt": prompt}, headers=headers, timeout=self._timeout
            )
            response.raise_for_status()
            text = response.json()["text"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise ProviderError(f"completion request failed: {exc}") from exc
        if not isinstance(text, str):
            raise ProviderError("completion response is not text")
        return text
