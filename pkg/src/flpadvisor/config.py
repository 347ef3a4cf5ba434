"""Runtime configuration: scale thresholds, family lookup tables, service settings.

Values resolve in precedence order config file > CLI flags > environment >
defaults. Threshold and family-table data live here rather than in code so
operators can retune clustering without touching the package.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

ENV_PROVIDERS = "FLPADV_PROVIDERS"
ENV_LLM_ENDPOINT = "FLPADV_LLM_ENDPOINT"
ENV_LLM_KEY = "FLPADV_LLM_KEY"
ENV_EMBED_ENDPOINT = "FLPADV_EMBED_ENDPOINT"
ENV_EMBED_KEY = "FLPADV_EMBED_KEY"

UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True)
class ScaleThresholds:
    """Facility-count boundaries for the small/medium/large scale clusters.

    Defaults straddle the benchmark scales (10, 15, 30, 40): small covers
    up to 15 facilities, medium up to 35, large is everything above.
    """

    small_max: int = 15
    medium_max: int = 35

    def __post_init__(self) -> None:
        if not 1 <= self.small_max < self.medium_max:
            raise ValueError(f"require 1 <= small_max < medium_max, got {self}")

    def label(self, num_facilities: int) -> str:
        if num_facilities <= self.small_max:
            return "small"
        if num_facilities <= self.medium_max:
            return "medium"
        return "large"

    @property
    def top_level(self) -> str:
        """The cluster used by the out-of-scale fallback search."""
        return "large"


@dataclass(frozen=True)
class FamilyTable:
    """Editable lookup from method / constraint-handling names to family names.

    Keys are canonical (lower-cased, single-spaced) names; unknown names map
    to ``uncategorized``.
    """

    methods: Mapping[str, str]
    constraint_handling: Mapping[str, str]

    def method_family(self, canonical_name: str) -> str:
        return self.methods.get(canonical_name, UNCATEGORIZED)

    def handling_family(self, canonical_name: str) -> str:
        return self.constraint_handling.get(canonical_name, UNCATEGORIZED)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FamilyTable":
        return cls(
            methods={str(k).lower(): str(v) for k, v in data.get("methods", {}).items()},
            constraint_handling={
                str(k).lower(): str(v) for k, v in data.get("constraint_handling", {}).items()
            },
        )

    @classmethod
    def load(cls, path: Path | None = None) -> "FamilyTable":
        """Load a family table from ``path``, or the packaged default."""
        if path is None:
            text = resources.files("flpadvisor").joinpath("data/families.json").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        return cls.from_dict(json.loads(text))


@dataclass
class ServiceConfig:
    """Everything the service and CLI need to wire a working stack."""

    store_path: Path | None = None
    http_port: int = 8080
    provider_mode: str = "mock"  # "mock" or "remote"
    llm_endpoint: str | None = None
    llm_key: str | None = None
    embed_endpoint: str | None = None
    embed_key: str | None = None
    graph_limit: int = 5
    vector_k: int = 5
    thresholds: ScaleThresholds = field(default_factory=ScaleThresholds)
    family_table_path: Path | None = None
    # when set, feedback lands in this reviewable snapshot instead of the live store
    feedback_pending_path: Path | None = None

    def validate(self) -> None:
        if self.provider_mode not in ("mock", "remote"):
            raise ValueError(f"provider_mode must be 'mock' or 'remote', got {self.provider_mode!r}")
        if self.provider_mode == "remote":
            if not self.llm_endpoint or not self.embed_endpoint:
                raise ValueError("provider_mode=remote requires llm_endpoint and embed_endpoint")
        if self.graph_limit < 1 or self.vector_k < 1:
            raise ValueError("retrieval limits must be >= 1")

    def family_table(self) -> FamilyTable:
        return FamilyTable.load(self.family_table_path)


def _apply(config: ServiceConfig, values: Mapping[str, Any]) -> ServiceConfig:
    updates: dict[str, Any] = {}
    for key, value in values.items():
        if value is None:
            continue
        if key == "thresholds" and isinstance(value, Mapping):
            value = ScaleThresholds(**value)
        elif key in ("store_path", "family_table_path", "feedback_pending_path"):
            value = Path(value)
        updates[key] = value
    return replace(config, **updates) if updates else config


def resolve_config(
    flags: Mapping[str, Any] | None = None,
    config_file: Path | None = None,
    env: Mapping[str, str] | None = None,
) -> ServiceConfig:
    """Build a validated ServiceConfig.

    Precedence (highest wins): config file, then CLI flags, then environment,
    then built-in defaults.
    """
    env = os.environ if env is None else env
    config = ServiceConfig()
    config = _apply(
        config,
        {
            "provider_mode": env.get(ENV_PROVIDERS),
            "llm_endpoint": env.get(ENV_LLM_ENDPOINT),
            "llm_key": env.get(ENV_LLM_KEY),
            "embed_endpoint": env.get(ENV_EMBED_ENDPOINT),
            "embed_key": env.get(ENV_EMBED_KEY),
        },
    )
    if flags:
        config = _apply(config, flags)
    if config_file is not None:
        config = _apply(config, json.loads(Path(config_file).read_text("utf-8")))
    config.validate()
    return config
