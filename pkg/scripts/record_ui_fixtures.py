#!/usr/bin/env python3
"""Record real API responses as JSON fixtures for the frontend tests.

Boots the service in-process over the seeded demo knowledge base and saves
each interaction the UI testsre-play, so every value the UI renders in
tests is a value the API actually produced.

    python scripts/record_ui_fixtures.py [output-dir]
"""

import dataclasses
import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from flpadvisor import SEED_CORPUS, ServiceConfig, data_path
from flpadvisor.ingestion import parse_corpus
from flpadvisor.service import build_context, create_app

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from conftest import build_store  # noqa: E402
from flpadvisor import FamilyTable, ScaleThresholds  # noqa: E402


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("frontend/fixtures")
    out_dir.mkdir(parents=True, exist_ok=True)

    seed_text = data_path(SEED_CORPUS).read_text("utf-8")
    store = build_store(seed_text, ScaleThresholds(), FamilyTable.load())
    ctx = build_context(ServiceConfig(provider_mode="mock"), store=store)
    ctx.index.index_all()
    client = TestClient(create_app(ctx), raise_server_exceptions=False)

    def save(name: str, response) -> None:
        payload = {"status": response.status_code, "body": response.json()}
        (out_dir / name).write_text(json.dumps(payload, indent=2) + "\n", "utf-8")
        print(f"recorded {name} ({response.status_code})")

    save("entities.json", client.get("/api/entities"))
    save("stats.json", client.get("/api/stats"))

    case1 = {
        "num_facilities": 10,
        "objectives": ["min material handling cost"],
        "constraints": ["non-overlapping", "boundary constraints"],
        "free_text": "compact production cells near the shipping dock",
    }
    save("recommend_case1.json", client.post("/api/recommend", json=case1))
    save("recommend_fallback.json", client.post("/api/recommend", json={"num_facilities": 100}))
    save(
        "recommend_unknown_entity.json",
        client.post("/api/recommend", json={"objectives": ["min materail handling cost"]}),
    )

    rows, _ = parse_corpus(seed_text)
    template = dataclasses.asdict(rows[0])
    record = dict(
        template,
        problem_id="P_UI_60",
        num_facilities=60,
        method="NovelHybridSearch",
        objective="min material handling cost",
        constraints="non-overlapping, boundary constraint",
        cost=21500.75,
        time_sec=990.0,
        source="operator submission",
    )
    bad = dict(record, cost=-3, num_facilities=0)
    save("feedback_invalid.json", client.post("/api/feedback", json=bad))
    save("feedback_success.json", client.post("/api/feedback", json=record))
    save("feedback_duplicate.json", client.post("/api/feedback", json=record))
    save("entities_after_feedback.json", client.get("/api/entities"))


if __name__ == "__main__":
    main()
