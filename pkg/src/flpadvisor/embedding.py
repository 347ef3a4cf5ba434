"""Problem description embedding and exact cosine top-k search.

Each problem node gets a templated full-text description; the embedding
vector is computed once per problem and cached on the node itself, so the
node set with cached vectors IS the index. Search is an exact brute-force
cosine scan — the knowledge base is desk-scale and correctness beats
approximate structures here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import graph_store as gs
from .errors import EmptyIndex, ProviderError, ZeroVector
from .graph_store import GraphStore
from .ingestion import ProblemInstance, problem_instance_from_node
from .providers import EmbeddingProvider


@dataclass(frozen=True)
class VectorMatch:
    problem_id: str
    similarity: float
    description_text: str


def build_description(problem: ProblemInstance) -> str:
    """Deterministic full-text description of a problem instance."""
    objectives = ", ".join(problem.objectives) or "unspecified"
    constraints = ", ".join(problem.constraints) or "unspecified"
    return (
        f"Facility layout problem with {problem.num_facilities} facilities. "
        f"Objectives: {objectives}. "
        f"Constraints: {constraints}. "
        f"Representation: {problem.representation}. "
        f"Constraint handling: {problem.constraint_handling}."
    )


def _cosine(query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    query_norm = float(np.linalg.norm(query))
    row_norms = np.linalg.norm(matrix, axis=1)
    return (matrix @ query) / (row_norms * query_norm)


class EmbeddingIndex:
    """Embeds problem descriptions through a provider and serves cosine top-k."""

    def __init__(self, store: GraphStore, provider: EmbeddingProvider):
        self.store = store
        self.provider = provider

    def _embed_checked(self, text: str) -> list[float]:
        vector = self.provider.embed(text)
        if len(vector) < 8:
            raise ProviderError(f"embedding dimension {len(vector)} is below the minimum of 8")
        if not any(vector):
            raise ZeroVector(f"text embeds to the zero vector: {text[:60]!r}")
        return vector

    def index_problem(self, problem_id: str) -> bool:
        """Embed one problem unless its vector is already cached.

        Returns True when a new vector was computed and cached; False when the
        cache was already warm (no provider call happens). A provider failure
        leaves the node unembedded and retryable.
        """
        node = self.store.get_node(gs.PROBLEM, problem_id)
        if node is None:
            raise KeyError(f"no such problem: {problem_id}")
        if "embedding" in node.properties:
            return False
        description = build_description(problem_instance_from_node(node))
        vector = self._embed_checked(description)
        with self.store.batch():
            self.store.upsert_node(
                gs.PROBLEM,
                problem_id,
                {"embedding": vector, "description_text": description},
            )
        return True

    def index_all(self) -> int:
        """Embed every problem missing a vector; returns how many were added."""
        added = 0
        for node in self.store.nodes_by_label(gs.PROBLEM):
            if self.index_problem(node.key):
                added += 1
        return added

    def indexed_problem_ids(self) -> list[str]:
        return [
            node.key
            for node in self.store.nodes_by_label(gs.PROBLEM)
            if "embedding" in node.properties
        ]

    def similarity_search(self, query_text: str, k: int) -> list[VectorMatch]:
        """The k indexed problems most cosine-similar to the query text,
        descending, ties broken by problem_id ascending."""
        if k < 1:
            raise ValueError("k must be >= 1")
        entries = []
        with self.store.read_view():
            for node in self.store.nodes_by_label(gs.PROBLEM):
                if "embedding" in node.properties:
                    entries.append(
                        (
                            node.key,
                            node.properties["embedding"],
                            node.properties.get("description_text", ""),
                        )
                    )
            if not entries:
                raise EmptyIndex("no problems have cached embeddings")
            query_vector = np.asarray(self._embed_checked(query_text), dtype=float)
            matrix = np.asarray([vec for _, vec, _ in entries], dtype=float)
            similarities = _cosine(query_vector, matrix)
        ranked = sorted(
            zip(entries, similarities),
            key=lambda pair: (-pair[1], pair[0][0]),
        )
        return [
            VectorMatch(problem_id=pid, similarity=float(sim), description_text=desc)
            for (pid, _, desc), sim in ranked[:k]
        ]
