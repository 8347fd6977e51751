import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from depthlab.annotation import AnnotationService
from depthlab.benchmark import PairOrigin, PointPair
from depthlab.server import create_app

from tests.test_annotation import FakeClock, make_pairs


@pytest.fixture()
def client(tmp_path):
    clock = FakeClock()
    svc = AnnotationService(tmp_path / "events.jsonl", lease_seconds=60.0, clock=clock)
    for a in ("ann1", "ann2", "ann3"):
        svc.register_annotator(a)
    svc.enqueue(make_pairs(2))
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(tmp_path / "im0.png")
    app = create_app(svc, image_paths={"im0": str(tmp_path / "im0.png")})
    return TestClient(app), svc, clock


def test_next_and_submit_happy_path(client):
    c, svc, _ = client
    r = c.get("/api/next", params={"annotator": "ann1"})
    assert r.status_code == 200
    pair = r.json()["pair"]
    assert pair["pair_id"] == "im0#0"
    assert pair["role"] == "primary"
    assert "lease_expiry" in pair

    r = c.post(
        "/api/submit",
        json={"annotator": "ann1", "pair_id": pair["pair_id"], "decision": "first_closer"},
    )
    assert r.status_code == 200
    assert r.json()["status"] == "awaiting_verification"


def test_next_exhausted_returns_null(client):
    c, svc, _ = client
    for _ in range(2):
        pair = c.get("/api/next", params={"annotator": "ann1"}).json()["pair"]
        c.post(
            "/api/submit",
            json={"annotator": "ann1", "pair_id": pair["pair_id"], "decision": "skip"},
        )
    assert c.get("/api/next", params={"annotator": "ann1"}).json()["pair"] is None


def test_error_codes(client):
    c, svc, clock = client
    r = c.get("/api/next", params={"annotator": "nobody"})
    assert r.status_code == 400
    assert r.json()["code"] == "unknown_annotator"

    pair = c.get("/api/next", params={"annotator": "ann1"}).json()["pair"]
    r = c.post(
        "/api/submit",
        json={"annotator": "ann1", "pair_id": pair["pair_id"], "decision": "closest"},
    )
    assert r.status_code == 422
    assert r.json()["code"] == "bad_decision"

    clock.advance(61.0)
    r = c.post(
        "/api/submit",
        json={"annotator": "ann1", "pair_id": pair["pair_id"], "decision": "first_closer"},
    )
    assert r.status_code == 409
    assert r.json()["code"] == "lease_expired"


def test_duplicate_submission_code(client):
    c, svc, _ = client
    pair = c.get("/api/next", params={"annotator": "ann1"}).json()["pair"]
    c.post(
        "/api/submit",
        json={"annotator": "ann1", "pair_id": pair["pair_id"], "decision": "first_closer"},
    )
    r = c.post(
        "/api/submit",
        json={"annotator": "ann1", "pair_id": pair["pair_id"], "decision": "first_closer"},
    )
    assert r.status_code == 409
    assert r.json()["code"] == "duplicate_submission"


def test_progress_endpoint(client):
    c, svc, _ = client
    r = c.get("/api/progress")
    assert r.status_code == 200
    body = r.json()
    assert body["total"] == 2
    assert body["by_status"]["queued"] == 2
    assert body == svc.progress()


def test_pair_image_with_coordinate_headers(client):
    c, svc, _ = client
    r = c.get("/api/pair/im0%230/image")
    assert r.status_code == 200
    assert r.headers["x-pair-id"] == "im0#0"
    assert r.headers["x-pair-p1"] == "0,0"
    assert r.headers["x-pair-p2"] == "1,1"
    assert r.headers["content-type"] == "image/png"
    assert r.content[:8] == b"\x89PNG\r\n\x1a\n"

    r = c.get("/api/pair/ghost/image")
    assert r.status_code == 404
    assert r.json()["code"] == "unknown_pair"
