"""Local wire API for driving a live audit.

HTTP+JSON under /api/v1, backed by a SessionStore.  Every mutation goes
through the same session transition code the CLI uses, so the two
interfaces produce identical logs for identical inputs.  Per-session
appends are serialized by the store's single-writer lock; reads replay
an immutable log prefix.

Local-first by design: bind loopback and hand the static token to the
operator UI.  Network hardening (TLS, real authentication) is out of
scope for an audit run on-site.
"""

from __future__ import annotations

import datetime as _dt
from pathlib import Path

from fastapi import Body, FastAPI, Header, HTTPException
from fastapi.responses import PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from .bounds import all_bounds, compute_margins
from .model import ModelError
from .session import report, report_bytes, report_tables_csv, render_report_text, verdict_document
from .store import SessionStore


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

_STATUS = {
    "NO_SUCH_SESSION": 404,
    "UNKNOWN_BATCH": 404,
    "BATCH_NOT_IN_SAMPLE": 422,
    "ILLEGAL_TRANSITION": 409,
    "STALE_SUBTOTALS": 409,
    "SESSION_EXISTS": 409,
    "ALREADY_COUNTED": 409,
    "TOO_EARLY": 409,
}


def _http(exc: ModelError) -> HTTPException:
    status = _STATUS.get(exc.code, 400)
    return HTTPException(status_code=status, detail={"code": exc.code, "message": str(exc), "detail": {}})


def create_app(store_root: str, token: str | None = None, ui_dir: str | None = None) -> FastAPI:
    store = SessionStore(store_root)
    app = FastAPI(title="rlakit audit service", version="1")

    def check_token(x_audit_token: str | None):
        if token is not None and x_audit_token != token:
            raise HTTPException(status_code=401, detail={"code": "BAD_TOKEN", "message": "missing or wrong token", "detail": {}})

    def mutate(session_id: str, kind: str, payload: dict, actor: str, ts: str | None):
        try:
            return store.append(session_id, kind, payload, actor, ts or _now())
        except ModelError as exc:
            raise _http(exc)

    def load(session_id: str):
        try:
            return store.load(session_id)
        except ModelError as exc:
            raise _http(exc)

    @app.get("/api/v1/sessions")
    def list_sessions():
        return {"sessions": store.list_sessions()}

    @app.post("/api/v1/sessions")
    def create_session(body: dict = Body(...), x_audit_token: str | None = Header(default=None)):
        check_token(x_audit_token)
        session_id = body["session_id"]
        if store.exists(session_id):
            raise _http(ModelError("SESSION_EXISTS", session_id))
        entry = mutate(session_id, "contest", {"session_id": session_id, "election": body["election"]},
                       body.get("actor", "api"), body.get("ts"))
        return {"session_id": session_id, "seq": entry.seq, "hash": entry.entry_hash}

    @app.get("/api/v1/sessions/{session_id}")
    def snapshot(session_id: str):
        s = load(session_id)
        return {
            "session_id": s.id,
            "state": s.state,
            "round": s.round + 1,
            "head": s.head_hash,
            "plan": s.plan.to_json() if s.plan else None,
            "seed_committed": s.seed is not None,
            "sampled": s.sample_times,
            "counted": sorted(s.counts),
            "pending": sorted(s.pending_counts),
            "mismatches": sorted(b for b, hist in s.mismatches.items() if not hist[-1].get("resolved")),
            "verdict": s.verdict.to_json() if s.verdict else None,
        }

    def _event_endpoint(kind: str):
        def handler(session_id: str, body: dict | None = Body(default=None),
                    x_audit_token: str | None = Header(default=None)):
            check_token(x_audit_token)
            body = dict(body or {})
            actor = body.pop("actor", "api")
            ts = body.pop("ts", None)
            entry = mutate(session_id, kind, body, actor, ts)
            s = load(session_id)
            return {"seq": entry.seq, "hash": entry.entry_hash, "state": s.state,
                    "payload": entry.payload,
                    "verdict": s.verdict.to_json() if s.verdict else None}

        return handler

    app.post("/api/v1/sessions/{session_id}/plan")(_event_endpoint("plan"))
    app.post("/api/v1/sessions/{session_id}/seed")(_event_endpoint("seed"))
    app.post("/api/v1/sessions/{session_id}/draw")(_event_endpoint("draw"))
    app.post("/api/v1/sessions/{session_id}/counts")(_event_endpoint("count"))
    app.post("/api/v1/sessions/{session_id}/resolve")(_event_endpoint("resolve_count"))
    app.post("/api/v1/sessions/{session_id}/reveals")(_event_endpoint("reveal"))
    app.post("/api/v1/sessions/{session_id}/full-count")(_event_endpoint("full_count"))
    app.post("/api/v1/sessions/{session_id}/close")(_event_endpoint("close"))

    @app.post("/api/v1/sessions/{session_id}/assess")
    def assess(session_id: str, body: dict | None = Body(default=None),
               x_audit_token: str | None = Header(default=None)):
        check_token(x_audit_token)
        body = body or {}
        actor = body.get("actor", "api")
        ts = body.get("ts")
        mutate(session_id, "assess", {}, actor, ts)
        mutate(session_id, "apply_verdict", {}, actor, ts)
        s = load(session_id)
        return {"state": s.state, "verdict": s.verdict.to_json() if s.verdict else None,
                "assessment": s.assessment}

    @app.get("/api/v1/sessions/{session_id}/sample")
    def sample(session_id: str):
        s = load(session_id)
        if s.contest is None:
            raise _http(ModelError("TOO_EARLY", "no contest bound"))
        margins = compute_margins(s.contest)
        bounds = all_bounds(s.contest, margins)
        decimals = 2 if s.contest.rule.kind == "plurality" else 3
        rows = []
        for bid in s.sampled_ids():
            batch = s.contest.batch(bid)
            rows.append({
                "batch_id": bid,
                "ballots": batch.ballots,
                "stratum": batch.stratum,
                "mode": batch.mode,
                "times": s.sample_times[bid],
                "u_p": bounds[bid].display_relative(decimals),
                "needs_reveal": batch.subtotals is None and bid not in s.reveals,
                "counted": bid in s.counts,
                "pending": bid in s.pending_counts,
                "mismatch": bid in s.mismatches and not s.mismatches[bid][-1].get("resolved"),
            })
        return {
            "rows": rows,
            "draws": [d.to_json() for d in s.draws],
            "candidates": list(s.contest.candidates),
        }

    @app.get("/api/v1/sessions/{session_id}/bounds")
    def bounds_table(session_id: str):
        s = load(session_id)
        if s.contest is None:
            raise _http(ModelError("TOO_EARLY", "no contest bound"))
        margins = compute_margins(s.contest)
        bounds = all_bounds(s.contest, margins)
        decimals = 2 if s.contest.rule.kind == "plurality" else 3
        return {
            "margins": margins.to_json(),
            "rows": [
                {
                    "batch_id": bid,
                    "ballots": s.contest.batch(bid).ballots,
                    "scheme": b.scheme,
                    "bound_votes": b.display_votes,
                    "u_p": b.display_relative(decimals),
                }
                for bid, b in sorted(bounds.items())
            ],
        }

    @app.get("/api/v1/sessions/{session_id}/report")
    def get_report(session_id: str, text: bool = False, csv: bool = False):
        s = load(session_id)
        try:
            doc = report(s)
        except ModelError as exc:
            raise _http(exc)
        if text:
            return PlainTextResponse(render_report_text(doc))
        if csv:
            return PlainTextResponse(report_tables_csv(doc), media_type="text/csv")
        return Response(content=report_bytes(doc), media_type="application/json")

    @app.get("/api/v1/sessions/{session_id}/verdict")
    def get_verdict(session_id: str):
        s = load(session_id)
        try:
            return verdict_document(s)
        except ModelError as exc:
            raise _http(exc)

    @app.get("/api/v1/sessions/{session_id}/log")
    def get_log(session_id: str):
        path = store.path(session_id)
        if not path.exists():
            raise _http(ModelError("NO_SUCH_SESSION", session_id))
        return PlainTextResponse(path.read_text("utf-8"), media_type="application/jsonl")

    ui = ui_dir or str(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    if Path(ui).is_dir():
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")

    return app
