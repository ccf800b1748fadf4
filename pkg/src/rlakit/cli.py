"""Command-line front end.

Every audit verb is here: ingest raw exports, compute margins and
bounds, start a session (plan), commit the dice seed, draw, enter hand
counts (twice each), assess, report, verify a log's hash chain, run the
Monte Carlo risk validator, and serve the wire API for the operator UI.

Exit codes: 0 success, 2 validation error, 3 internal error.  With
--json, errors print machine-readable JSON on stderr.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bounds import all_bounds, bounds_csv, compute_margins
from .exact import parse_frac
from .ingest import Mapping, RawExport, normalize
from .model import AuditPlan, ModelError, decode_election, encode_election, validate_contest
from .policy import ContestStats, EscalationState, Rulebook, modest_proposal_decision, modest_proposal_probability
from .sampling import SeedRecord, draw_ppeb, draw_srs, draw_to_csv
from .session import (
    Session,
    parse_log,
    render_report_text,
    replay,
    report,
    report_bytes,
    report_tables_csv,
    verdict_document,
    verify_chain,
)
from .simulate import adversarial_suite, run_suite, simulate_risk


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _read_contest(path: str):
    contest = decode_election(Path(path).read_text("utf-8"))
    findings = validate_contest(contest)
    if findings:
        raise ModelError("INVALID_CONTEST", "; ".join(f"{f.code}@{f.where}" for f in findings))
    return contest


def _load_session(path: str) -> Session:
    return replay(parse_log(Path(path).read_text("utf-8")), Path(path).stem)


def _append(path: str, session: Session, kind: str, payload: dict, actor: str, ts: str | None):
    entry = session.append(kind, payload, actor, ts or _now())
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(entry.to_line() + "\n")
    return entry


def _tally_args(pairs: list[str]) -> dict[str, int]:
    out = {}
    for pair in pairs:
        cand, _, value = pair.partition("=")
        if not value.isdigit():
            raise ModelError("BAD_TALLY", f"expected CANDIDATE=COUNT, got {pair!r}")
        out[cand] = int(value)
    return out


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    mapping = Mapping.from_file(args.mapping)
    raw = RawExport(Path(args.infile).read_bytes(), mapping.dialect)
    contest, rep = normalize(raw, mapping)
    Path(args.out).write_text(encode_election(contest), "utf-8")
    if args.report:
        Path(args.report).write_text(json.dumps(rep.to_json(), indent=2) + "\n", "utf-8")
    print(f"wrote {args.out}: {len(contest.batches)} batches "
          f"({rep.rows_clean} clean, {rep.rows_repaired} repaired, {rep.rows_dropped} dropped)")
    return 0


def cmd_margins(args) -> int:
    contest = _read_contest(args.contest)
    margins = compute_margins(contest)
    print(json.dumps(margins.to_json(), indent=2, sort_keys=True))
    return 0


def cmd_bounds(args) -> int:
    contest = _read_contest(args.contest)
    csv_text = bounds_csv(contest, all_bounds(contest))
    if args.out:
        Path(args.out).write_text(csv_text, "utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_plan(args) -> int:
    contest = _read_contest(args.contest)
    if Path(args.session).exists():
        raise ModelError("SESSION_EXISTS", args.session)
    plan = AuditPlan(
        risk_limit=parse_frac(args.alpha),
        method=args.method,
        allowance_votes=args.allowance,
        taint_threshold=parse_frac(args.d) if args.d else None,
        draws=args.n,
        exempt_threshold_votes=args.exempt_threshold,
        sample_sizes=json.loads(args.sample_sizes) if args.sample_sizes else None,
        policy_id=args.policy_id,
    )
    session = Session(id=Path(args.session).stem)
    Path(args.session).touch()
    _append(args.session, session, "contest",
            {"session_id": session.id, "election": json.loads(encode_election(contest))}, args.actor, args.ts)
    _append(args.session, session, "plan", {"plan": plan.to_json()}, args.actor, args.ts)
    print(f"session {session.id} planned: {plan.method} at risk limit {args.alpha}")
    return 0


def cmd_seed(args) -> int:
    session = _load_session(args.session)
    _append(args.session, session, "seed",
            {"seed": {"digits": args.digits, "committed_at": args.ts or _now(),
                      "committed_after_results": not args.before_results}},
            args.actor, args.ts)
    print(f"seed committed ({len(args.digits)} digits)")
    return 0


def cmd_draw(args) -> int:
    if args.session:
        session = _load_session(args.session)
        payload: dict = {"source": "engine"}
        if args.selections:
            payload = {
                "source": "external",
                "result": {"method": args.method.upper() if args.method else "SRS",
                           "selections": args.selections.split(","), "trail": []},
            }
        entry = _append(args.session, session, "draw", payload, args.actor, args.ts)
        result = entry.payload["result"]
        print(f"drew {len(result['selections'])} selections: {', '.join(result['selections'])}")
        return 0
    # standalone draw from a bounds CSV (columns: batch_id,...,u_p last)
    seed = SeedRecord(digits=args.seed, committed_at=_now())
    rows = [line.split(",") for line in Path(args.bounds).read_text().splitlines()[1:] if line]
    if args.method == "ppeb":
        weights = [(r[0], parse_frac(r[-1])) for r in rows]
        result = draw_ppeb(weights, args.n, seed)
    else:
        result = draw_srs([r[0] for r in rows], args.n, seed)
    out = json.dumps(result.to_json(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(out, "utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(out)
    if args.trail_csv:
        Path(args.trail_csv).write_text(draw_to_csv(result), "utf-8")
    return 0


def cmd_count(args) -> int:
    session = _load_session(args.session)
    if args.full_count:
        _append(args.session, session, "full_count", {"tallies": _tally_args(args.tally)}, args.actor, args.ts)
        print("full-count result recorded; session certified on the hand count")
        return 0
    if args.reveal:
        _append(args.session, session, "reveal",
                {"batch_id": args.batch, "subtotals": _tally_args(args.tally)}, args.actor, args.ts)
        print(f"reported subtotals revealed for deck {args.batch}")
        return 0
    count = {
        "batch_id": args.batch,
        "counted_ballots": args.ballots,
        "tallies": _tally_args(args.tally),
        "entered_by": args.actor,
        "timestamp": args.ts or _now(),
    }
    kind = "resolve_count" if args.resolve else "count"
    entry = _append(args.session, session, kind, {"count": count}, args.actor, args.ts)
    if entry.payload.get("mismatch"):
        print(f"MISMATCH on {args.batch}: double entry disagrees; supervisor must resolve")
    elif entry.payload.get("accepted") or kind == "resolve_count":
        print(f"count accepted for {args.batch}")
    else:
        print(f"first entry recorded for {args.batch}; awaiting confirming entry")
    return 0


def cmd_assess(args) -> int:
    session = _load_session(args.session)
    _append(args.session, session, "assess", {}, args.actor, args.ts)
    _append(args.session, session, "apply_verdict", {}, args.actor, args.ts)
    assert session.verdict is not None
    if args.verdict_out:
        doc = verdict_document(session)
        Path(args.verdict_out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"verdict: {session.verdict.decision} (statistic {session.verdict.to_json()['statistic']})")
    print(session.verdict.narrative)
    return 0


def cmd_report(args) -> int:
    session = _load_session(args.session)
    doc = report(session)
    if args.out:
        Path(args.out).write_bytes(report_bytes(doc))
        print(f"wrote {args.out}")
    if args.csv:
        Path(args.csv).write_text(report_tables_csv(doc), "utf-8")
        print(f"wrote {args.csv}")
    if args.text:
        sys.stdout.write(render_report_text(doc))
    elif not args.out and not args.csv:
        sys.stdout.buffer.write(report_bytes(doc))
    return 0


def cmd_verify_log(args) -> int:
    entries = parse_log(Path(args.log).read_text("utf-8"))
    broken = verify_chain(entries)
    if broken is not None:
        raise ModelError("CHAIN_BROKEN", f"entry {broken}")
    session = replay(entries, Path(args.log).stem)
    print(f"chain verified: {len(entries)} entries, head {session.head_hash[:16]}…, state {session.state}")
    return 0


def cmd_policy(args) -> int:
    book = Rulebook.from_file(args.rulebook) if args.rulebook else Rulebook.bundled()
    if args.policy_cmd == "size":
        stats = ContestStats(**json.load(open(args.stats)))
        print(book.initial_sample_size(args.rule, stats))
        return 0
    if args.policy_cmd == "eval":
        doc = json.load(open(args.state))
        stats = ContestStats(**doc.get("stats", {})) if "stats" in doc else None
        state = EscalationState(
            round=doc.get("round", 0),
            discrepancy_fraction=parse_frac(str(doc.get("discrepancy_fraction", 0))),
            small_precinct_vote_diff=doc.get("small_precinct_vote_diff", 0),
            vote_share_shift=parse_frac(str(doc.get("vote_share_shift", 0))),
            erroneous_machine_fraction=parse_frac(str(doc.get("erroneous_machine_fraction", 0))),
            cross_county_vote_share=parse_frac(str(doc.get("cross_county_vote_share", 0))),
            outcome_changed=doc.get("outcome_changed", False),
        )
        action = book.escalation_step(args.rule, state, stats)
        print(json.dumps({"action": action.kind, "add_units": action.add_units,
                          "unit": action.unit, "note": action.note}))
        return 0
    if args.policy_cmd == "modest":
        f, m = parse_frac(args.eligible), parse_frac(args.margin)
        if args.seed:
            hit, p = modest_proposal_decision(f, m, SeedRecord(digits=args.seed), args.race)
            print(json.dumps({"probability": str(p), "full_count": hit}))
        else:
            print(json.dumps({"probability": str(modest_proposal_probability(f, m))}))
        return 0
    raise ModelError("USAGE", "policy needs a sub-command: size, eval or modest")


def cmd_simulate(args) -> int:
    configs = adversarial_suite()
    if args.config:
        configs = [c for c in configs if args.config in c.name]
        if not configs:
            raise ModelError("UNKNOWN_CONFIG", args.config)
        results = [simulate_risk(c, args.trials, args.rng_seed + i) for i, c in enumerate(configs)]
    else:
        results = run_suite(args.trials, args.rng_seed)
    failed = 0
    for r in results:
        print(r.row())
        failed += 0 if r.passed else 1
    print(f"{len(results) - failed}/{len(results)} configurations within alpha + 3 sigma")
    return 0 if failed == 0 else 2


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    if not args.store:
        raise ModelError("NO_STORE", "pass --store or set RLA_STORE")
    app = create_app(args.store, token=args.token, ui_dir=args.ui)
    host, _, port = args.bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8799), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rla", description=__doc__)
    parser.add_argument("--json", action="store_true", help="machine-readable errors on stderr")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--actor", default="operator")
        p.add_argument("--ts", default=None, help="fixed timestamp (ISO8601) for reproducible logs")

    p = sub.add_parser("ingest", help="normalize an EMS export into the canonical election file")
    p.add_argument("--mapping", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("margins", help="pairwise and supermajority margins")
    p.add_argument("--contest", required=True)
    p.set_defaults(fn=cmd_margins)

    p = sub.add_parser("bounds", help="per-batch worst-case error bounds as CSV")
    p.add_argument("--contest", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("plan", help="start a session: bind the contest and record the plan")
    p.add_argument("--contest", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--method", required=True,
                   choices=["STRATIFIED_WORST_CASE", "EXEMPT_STRATUM_MRO", "TRINOMIAL_PPEB", "POLICY"])
    p.add_argument("--alpha", default="1/4")
    p.add_argument("--allowance", type=int, default=None)
    p.add_argument("--d", default=None, help="taint threshold, e.g. 0.047")
    p.add_argument("--n", type=int, default=None, help="number of draws")
    p.add_argument("--exempt-threshold", type=int, default=None)
    p.add_argument("--sample-sizes", default=None, help='per-stratum sizes as JSON, e.g. {"IP":6,"VBM":6}')
    p.add_argument("--policy-id", default=None)
    common(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("seed", help="commit the dice-rolled seed")
    p.add_argument("--session", required=True)
    p.add_argument("--digits", required=True)
    p.add_argument("--before-results", action="store_true",
                   help="admit the seed was set before results were public (rejected)")
    common(p)
    p.set_defaults(fn=cmd_seed)

    p = sub.add_parser("draw", help="draw the sample (session, or standalone from a bounds CSV)")
    p.add_argument("--session", default=None)
    p.add_argument("--selections", default=None, help="comma-separated external selections")
    p.add_argument("--method", default=None, choices=["srs", "ppeb", "SRS", "PPEB", "STRATIFIED"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", default=None, help="seed digits (standalone mode)")
    p.add_argument("--bounds", default=None, help="bounds CSV (standalone mode)")
    p.add_argument("--out", default=None)
    p.add_argument("--trail-csv", default=None)
    common(p)
    p.set_defaults(fn=cmd_draw)

    p = sub.add_parser("count", help="enter a hand count (run twice; double entry must match)")
    p.add_argument("--session", required=True)
    p.add_argument("--batch", default=None)
    p.add_argument("--ballots", type=int, default=0)
    p.add_argument("--tally", action="append", default=[], help="CANDIDATE=COUNT (repeatable)")
    p.add_argument("--resolve", action="store_true", help="supervisor resolution of a double-entry mismatch")
    p.add_argument("--reveal", action="store_true", help="record a deck's reported subtotals")
    p.add_argument("--full-count", action="store_true", help="record the full hand-count result")
    common(p)
    p.set_defaults(fn=cmd_count)

    p = sub.add_parser("assess", help="evaluate the evidence and apply the verdict")
    p.add_argument("--session", required=True)
    p.add_argument("--verdict-out", default=None, help="write the sealed verdict document")
    common(p)
    p.set_defaults(fn=cmd_assess)

    p = sub.add_parser("report", help="full audit report (JSON, text tables, or CSV)")
    p.add_argument("--session", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None, help="write the bounds/sample tables as CSV")
    p.add_argument("--text", action="store_true")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("verify-log", help="verify a session log's hash chain and replay it")
    p.add_argument("log")
    p.set_defaults(fn=cmd_verify_log)

    p = sub.add_parser("policy", help="statutory rules: initial sizes, escalation, bare-bones lottery")
    psub = p.add_subparsers(dest="policy_cmd", required=True)
    ps = psub.add_parser("size")
    ps.add_argument("--rule", required=True)
    ps.add_argument("--stats", required=True)
    ps.add_argument("--rulebook", default=None)
    ps.set_defaults(fn=cmd_policy)
    pe = psub.add_parser("eval")
    pe.add_argument("--rule", required=True)
    pe.add_argument("--state", required=True)
    pe.add_argument("--rulebook", default=None)
    pe.set_defaults(fn=cmd_policy)
    pm = psub.add_parser("modest")
    pm.add_argument("--eligible", required=True)
    pm.add_argument("--margin", required=True)
    pm.add_argument("--seed", default=None)
    pm.add_argument("--race", default="race")
    pm.add_argument("--rulebook", default=None)
    pm.set_defaults(fn=cmd_policy)

    p = sub.add_parser("simulate", help="Monte Carlo validation of the risk guarantee")
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--rng-seed", type=int, default=20080205)
    p.add_argument("--config", default=None, help="run only configurations whose name contains this")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("serve", help="run the local wire API (and UI, if built)")
    p.add_argument("--store", default=os.environ.get("RLA_STORE"),
                   help="session store directory (default: $RLA_STORE)")
    p.add_argument("--bind", default="127.0.0.1:8799")
    p.add_argument("--token", default=None)
    p.add_argument("--ui", default=None, help="directory with the built operator UI")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ModelError as exc:
        if args.json:
            print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal errors
        if args.json:
            print(json.dumps({"code": "INTERNAL", "message": str(exc)}), file=sys.stderr)
        else:
            print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
