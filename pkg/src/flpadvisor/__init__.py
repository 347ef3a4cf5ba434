"""Evidence-grounded algorithm recommendation for facility layout problems.

The stack: a CSV corpus of solved instances is merged into an embedded
property graph, problems are clustered and embedded, and each user query is
answered from three retrieval channels (exact graph search, cosine vector
search, cluster trends) compiled into a strict prompt for a pluggable
language model, whose two-section answer is parsed and grounding-checked.
"""

from importlib import resources
from pathlib import Path

from .config import FamilyTable, ScaleThresholds, ServiceConfig, resolve_config
from .embedding import EmbeddingIndex, VectorMatch, build_description
from .errors import (
    EmptyEvidence,
    EmptyIndex,
    EmptyStore,
    FlpAdvisorError,
    FormatError,
    HeaderMismatch,
    MalformedResponse,
    ProviderError,
    SchemaViolation,
    UnknownEntity,
    ValidationError,
    ZeroVector,
)
from .feedback import FeedbackReport, ingest_feedback, validate_feedback
from .graph_store import GraphStore, KnowledgeBaseStats, ProblemMatch, ProblemPredicate
from .ingestion import (
    CorpusRow,
    LoadReport,
    ProblemInstance,
    assign_clusters,
    canonicalize_name_list,
    load_corpus,
    parse_corpus,
)
from .providers import (
    EmbeddingProvider,
    EvidenceSummaryLlmProvider,
    HashedBagOfWordsEmbedding,
    LlmProvider,
    RemoteEmbeddingProvider,
    RemoteLlmProvider,
    ScriptedLlmProvider,
    StaticLlmProvider,
)
from .recommender import Recommendation, Recommender, compile_prompt, parse_response
from .retrieval import EvidenceDossier, Retriever, UserQuery

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a packaged data file (seed corpus, benchmark cases, families)."""
    return Path(str(resources.files("flpadvisor").joinpath(f"data/{name}")))


SEED_CORPUS = "seed_corpus.csv"
BENCHMARK_CASES = "benchmark_cases.json"
