"""Wire API: a Santa Cruz-shaped audit driven end to end over HTTP,
CLI/service parity, validation codes, and writer serialization."""

import json
import threading

import pytest
from fastapi.testclient import TestClient

from rlakit import pilots
from rlakit.model import encode_election
from rlakit.service import create_app
from rlakit.session import report_bytes, report

TOKEN = "test-token"
TS = "2008-11-21T10:00:00Z"


@pytest.fixture()
def client(tmp_path):
    app = create_app(str(tmp_path), token=TOKEN)
    with TestClient(app) as c:
        yield c


def post(client, path, body=None):
    r = client.post(path, json=body or {}, headers={"X-Audit-Token": TOKEN})
    return r


def drive_santa_cruz(client, session_id="sc-api"):
    contest = pilots.santa_cruz_supervisor()
    r = post(client, "/api/v1/sessions",
             {"session_id": session_id, "election": json.loads(encode_election(contest)), "ts": TS})
    assert r.status_code == 200, r.text
    plan = {
        "risk_limit": "1/4", "method": "TRINOMIAL_PPEB",
        "draws": 19, "taint_threshold": "47/1000",
    }
    assert post(client, f"/api/v1/sessions/{session_id}/plan", {"plan": plan, "ts": TS}).status_code == 200
    assert post(client, f"/api/v1/sessions/{session_id}/seed",
                {"seed": {"digits": "486035", "committed_after_results": True}, "ts": TS}).status_code == 200
    assert post(client, f"/api/v1/sessions/{session_id}/draw",
                {"source": "external",
                 "result": {"method": "PPEB", "selections": pilots.santa_cruz_selections(), "trail": []},
                 "ts": TS}).status_code == 200
    for hc in pilots.santa_cruz_hand_counts():
        for who in ("counter-1", "counter-2"):
            payload = hc.to_json()
            payload["entered_by"] = who
            r = post(client, f"/api/v1/sessions/{session_id}/counts", {"count": payload, "ts": TS})
            assert r.status_code == 200, r.text
    r = post(client, f"/api/v1/sessions/{session_id}/assess", {"ts": TS})
    assert r.status_code == 200
    return r.json()


def test_santa_cruz_flow_certifies(client):
    result = drive_santa_cruz(client)
    assert result["state"] == "CERTIFIED"
    assert result["verdict"]["decision"] == "CERTIFY"
    assert result["assessment"]["categories"] == [17, 2, 0]


def test_sample_rows_match_published_values(client):
    drive_santa_cruz(client)
    rows = client.get("/api/v1/sessions/sc-api/sample").json()["rows"]
    by_id = {r["batch_id"]: r for r in rows}
    assert len(by_id) == 16
    for bid, row in by_id.items():
        assert row["u_p"] == pilots.SANTA_CRUZ_UP[bid]
        assert row["times"] == pilots.santa_cruz_times()[bid]


def test_report_parity_with_direct_session(client):
    """The service's report equals the one computed straight from the
    session module (single code path through the same log)."""
    drive_santa_cruz(client)
    api_report = client.get("/api/v1/sessions/sc-api/report").content
    log_text = client.get("/api/v1/sessions/sc-api/log").text
    from rlakit.session import parse_log, replay

    session = replay(parse_log(log_text), "sc-api")
    assert api_report == report_bytes(report(session))


def test_count_for_unsampled_batch_is_422(client):
    contest = pilots.yolo_measure_w()
    post(client, "/api/v1/sessions",
         {"session_id": "y", "election": json.loads(encode_election(contest)), "ts": TS})
    plan = {"risk_limit": "1/4", "method": "EXEMPT_STRATUM_MRO",
            "allowance_votes": 5, "draws": 6, "exempt_threshold_votes": 5}
    post(client, "/api/v1/sessions/y/plan", {"plan": plan, "ts": TS})
    post(client, "/api/v1/sessions/y/seed",
         {"seed": {"digits": "118201", "committed_after_results": True}, "ts": TS})
    post(client, "/api/v1/sessions/y/draw", {"ts": TS})
    sampled = set(client.get("/api/v1/sessions/y").json()["sampled"])
    outside = next(b.id for b in contest.batches if b.id not in sampled)
    r = post(client, "/api/v1/sessions/y/counts",
             {"count": {"batch_id": outside, "counted_ballots": 1, "tallies": {"YES": 1},
                        "entered_by": "a", "timestamp": TS}, "ts": TS})
    assert r.status_code == 422
    assert r.json()["detail"]["code"] == "BATCH_NOT_IN_SAMPLE"


def test_draw_before_seed_is_409(client):
    contest = pilots.yolo_measure_w()
    post(client, "/api/v1/sessions",
         {"session_id": "y2", "election": json.loads(encode_election(contest)), "ts": TS})
    plan = {"risk_limit": "1/4", "method": "EXEMPT_STRATUM_MRO",
            "allowance_votes": 5, "draws": 6, "exempt_threshold_votes": 5}
    post(client, "/api/v1/sessions/y2/plan", {"plan": plan, "ts": TS})
    r = post(client, "/api/v1/sessions/y2/draw", {"ts": TS})
    assert r.status_code == 409
    assert r.json()["detail"]["code"] == "ILLEGAL_TRANSITION"


def test_missing_token_is_401(client):
    r = client.post("/api/v1/sessions", json={"session_id": "x", "election": {}})
    assert r.status_code == 401


def test_unknown_session_is_404(client):
    assert client.get("/api/v1/sessions/nope").status_code == 404


def test_concurrent_count_posts_are_serialized(client):
    """Two simultaneous submissions of the same batch: the single-writer
    lock makes them entries 1 and 2 of the double-entry pair, with no
    lost update (both appear in the log)."""
    contest = pilots.yolo_measure_w()
    post(client, "/api/v1/sessions",
         {"session_id": "conc", "election": json.loads(encode_election(contest)), "ts": TS})
    plan = {"risk_limit": "1/4", "method": "EXEMPT_STRATUM_MRO",
            "allowance_votes": 5, "draws": 6, "exempt_threshold_votes": 5}
    post(client, "/api/v1/sessions/conc/plan", {"plan": plan, "ts": TS})
    post(client, "/api/v1/sessions/conc/seed",
         {"seed": {"digits": "118201", "committed_after_results": True}, "ts": TS})
    post(client, "/api/v1/sessions/conc/draw", {"ts": TS})
    bid = sorted(client.get("/api/v1/sessions/conc").json()["sampled"])[0]
    batch = contest.batch(bid)
    payload = {"count": {"batch_id": bid, "counted_ballots": batch.ballots,
                         "tallies": dict(batch.subtotals), "entered_by": "x", "timestamp": TS}, "ts": TS}
    results = []

    def submit():
        results.append(post(client, "/api/v1/sessions/conc/counts", dict(payload)))

    threads = [threading.Thread(target=submit) for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r.status_code == 200 for r in results)
    entry_nos = sorted(r.json()["payload"]["entry_no"] for r in results)
    assert entry_nos == [1, 2]
    assert bid in client.get("/api/v1/sessions/conc").json()["counted"]


def test_openapi_document_served(client):
    doc = client.get("/openapi.json").json()
    assert any(p.startswith("/api/v1/sessions") for p in doc["paths"])


def test_verdict_document_endpoint(client):
    drive_santa_cruz(client, "sc-verdict")
    doc = client.get("/api/v1/sessions/sc-verdict/verdict").json()
    assert doc["decision"] == "CERTIFY"
    assert len(doc["signature"]) == 64
    assert doc["method"] == "TRINOMIAL_PPEB"


def test_cli_and_service_produce_identical_logs(tmp_path):
    """The same verbs with the same inputs through either interface land
    byte-identical session logs (single code path)."""
    import subprocess
    import sys

    contest = pilots.yolo_measure_w()
    contest_path = tmp_path / "yolo.json"
    contest_path.write_text(encode_election(contest), "utf-8")

    cli_dir = tmp_path / "cli"
    cli_dir.mkdir()

    def cli(*args):
        out = subprocess.run([sys.executable, "-m", "rlakit.cli", *args],
                             capture_output=True, text=True, cwd=cli_dir)
        assert out.returncode == 0, out.stderr
        return out

    cli("plan", "--contest", str(contest_path), "--session", "same.jsonl",
        "--method", "EXEMPT_STRATUM_MRO", "--alpha", "1/4", "--allowance", "5",
        "--n", "6", "--exempt-threshold", "5", "--actor", "op", "--ts", TS)
    cli("seed", "--session", "same.jsonl", "--digits", "118201", "--actor", "op", "--ts", TS)
    cli("draw", "--session", "same.jsonl", "--actor", "op", "--ts", TS)

    svc_store = tmp_path / "svc"
    app = create_app(str(svc_store), token=None)
    with TestClient(app) as c:
        c.post("/api/v1/sessions", json={"session_id": "same", "actor": "op", "ts": TS,
                                         "election": json.loads(encode_election(contest))})
        c.post("/api/v1/sessions/same/plan", json={
            "plan": {"risk_limit": "1/4", "method": "EXEMPT_STRATUM_MRO",
                     "allowance_votes": 5, "draws": 6, "exempt_threshold_votes": 5},
            "actor": "op", "ts": TS})
        c.post("/api/v1/sessions/same/seed", json={
            "seed": {"digits": "118201", "committed_at": TS, "committed_after_results": True},
            "actor": "op", "ts": TS})
        c.post("/api/v1/sessions/same/draw", json={"actor": "op", "ts": TS})

    cli_log = (cli_dir / "same.jsonl").read_text()
    svc_log = (svc_store / "same.jsonl").read_text()
    assert cli_log == svc_log
