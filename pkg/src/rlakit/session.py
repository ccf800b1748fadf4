"""Sequential audit workflow: a state machine over a hash-chained log.

The log IS the audit: every plan, seed commitment, draw, hand-count
submission and verdict appends one JSONL entry whose hash covers the
previous entry's hash, so a single flipped byte anywhere breaks the
chain at that sequence number.  All session state is derived by folding
the log; `replay` rebuilds a byte-identical session (and report) from
the file alone, which is what makes the audit publicly checkable.

State graph:

    DRAFT -> PLANNED -> SEED_COMMITTED -> SAMPLE_DRAWN -> COUNTING
    -> ASSESSED -> CERTIFIED | ESCALATED (next round draws again)
                 | FULL_COUNT -> CERTIFIED
    -> CLOSED

The reported subtotals freeze when the plan is recorded; the seed must
be committed (with an attestation that results were already public)
strictly before any draw.  Hand counts require two matching independent
submissions; a mismatch parks the batch until a supervisor resolves it,
with both originals retained in the log.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import bounds as bounds_mod
from . import risk
from .exact import decimal_str, frac_str
from .model import (
    EXEMPT_STRATUM_MRO,
    POLICY,
    STRATIFIED_WORST_CASE,
    SUPERMAJORITY,
    TRINOMIAL_PPEB,
    AuditPlan,
    Contest,
    HandCount,
    ModelError,
    decode_election,
    encode_election,
    validate_contest,
)
from .sampling import DrawResult, SeedRecord, draw_ppeb, draw_srs, draw_stratified

GENESIS = "0" * 64

DRAFT = "DRAFT"
PLANNED = "PLANNED"
SEED_COMMITTED = "SEED_COMMITTED"
SAMPLE_DRAWN = "SAMPLE_DRAWN"
COUNTING = "COUNTING"
ASSESSED = "ASSESSED"
ESCALATED = "ESCALATED"
FULL_COUNT = "FULL_COUNT"
CERTIFIED = "CERTIFIED"
CLOSED = "CLOSED"


class SessionError(ModelError):
    pass


def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class LogEntry:
    seq: int
    ts: str
    actor: str
    kind: str
    payload: dict
    prev_hash: str
    entry_hash: str

    @staticmethod
    def build(seq: int, ts: str, actor: str, kind: str, payload: dict, prev_hash: str) -> "LogEntry":
        body = _canonical({"seq": seq, "ts": ts, "actor": actor, "kind": kind, "payload": payload})
        entry_hash = hashlib.sha256((prev_hash + body).encode("utf-8")).hexdigest()
        return LogEntry(seq, ts, actor, kind, payload, prev_hash, entry_hash)

    def verify(self, prev_hash: str) -> bool:
        body = _canonical({"seq": self.seq, "ts": self.ts, "actor": self.actor, "kind": self.kind, "payload": self.payload})
        return (
            self.prev_hash == prev_hash
            and self.entry_hash == hashlib.sha256((prev_hash + body).encode("utf-8")).hexdigest()
        )

    def to_line(self) -> str:
        return _canonical(
            {
                "seq": self.seq,
                "ts": self.ts,
                "actor": self.actor,
                "kind": self.kind,
                "payload": self.payload,
                "prev": self.prev_hash,
                "hash": self.entry_hash,
            }
        )

    @staticmethod
    def from_line(line: str) -> "LogEntry":
        obj = json.loads(line)
        return LogEntry(
            seq=obj["seq"], ts=obj["ts"], actor=obj["actor"], kind=obj["kind"],
            payload=obj["payload"], prev_hash=obj["prev"], entry_hash=obj["hash"],
        )


@dataclass
class Session:
    """Live view of one audit, derived entirely from its log entries."""

    id: str
    state: str = DRAFT
    round: int = 0
    contest: Contest | None = None
    plan: AuditPlan | None = None
    seed: SeedRecord | None = None
    draws: list[DrawResult] = field(default_factory=list)
    sample_times: dict[str, int] = field(default_factory=dict)
    pending_counts: dict[str, dict] = field(default_factory=dict)
    counts: dict[str, HandCount] = field(default_factory=dict)
    count_rounds: dict[str, int] = field(default_factory=dict)
    mismatches: dict[str, list[dict]] = field(default_factory=dict)
    reveals: dict[str, dict[str, int]] = field(default_factory=dict)
    verdict: risk.Verdict | None = None
    assessment: dict | None = None
    full_count_tallies: dict[str, int] | None = None
    entries: list[LogEntry] = field(default_factory=list)
    head_hash: str = GENESIS

    # -- derived --------------------------------------------------------

    def sampled_ids(self) -> list[str]:
        return sorted(self.sample_times)

    def ballots_audited(self) -> int:
        assert self.contest is not None
        return sum(self.contest.batch(b).ballots for b in self.counts)

    def margins(self) -> "bounds_mod.MarginSet":
        assert self.contest is not None
        return bounds_mod.compute_margins(self.contest)

    def bounds(self) -> dict[str, bounds_mod.ErrorBound]:
        assert self.contest is not None
        return bounds_mod.all_bounds(self.contest)

    def append(self, kind: str, payload: dict, actor: str, ts: str) -> LogEntry:
        """Validate the event against the current state, advance, and log."""
        handler = _HANDLERS.get(kind)
        if handler is None:
            raise SessionError("UNKNOWN_EVENT", kind)
        payload = handler(self, dict(payload))
        entry = LogEntry.build(len(self.entries), ts, actor, kind, payload, self.head_hash)
        self.entries.append(entry)
        self.head_hash = entry.entry_hash
        return entry


# -- event handlers: validate, mutate, return the payload to be logged ----


def _require_state(session: Session, *states: str):
    if session.state not in states:
        raise SessionError(
            "ILLEGAL_TRANSITION",
            f"event not allowed in state {session.state} (needs {' or '.join(states)})",
        )


def _on_contest(session: Session, payload: dict) -> dict:
    if session.contest is not None and session.state != DRAFT:
        raise SessionError("STALE_SUBTOTALS", "reported results are frozen once the audit is planned")
    _require_state(session, DRAFT)
    contest = decode_election(json.dumps(payload["election"]))
    findings = validate_contest(contest)
    if findings:
        raise SessionError("INVALID_CONTEST", "; ".join(f"{f.code}@{f.where}" for f in findings))
    session.contest = contest
    return payload


def _on_plan(session: Session, payload: dict) -> dict:
    _require_state(session, DRAFT)
    if session.contest is None:
        raise SessionError("NO_CONTEST", "bind a contest before planning")
    plan = AuditPlan.from_json(payload["plan"])
    if plan.method == STRATIFIED_WORST_CASE and not plan.sample_sizes:
        raise SessionError("BAD_PLAN", "stratified method needs per-stratum sample sizes")
    if plan.method == EXEMPT_STRATUM_MRO and (plan.draws is None or plan.exempt_threshold_votes is None):
        raise SessionError("BAD_PLAN", "exempt-stratum method needs draws and an exemption threshold")
    if plan.method == POLICY:
        from .policy import Rulebook

        Rulebook.bundled().rule(plan.policy_id)  # must exist
        if plan.draws is None or plan.draws < 1:
            raise SessionError("BAD_PLAN", "policy method needs the statutory initial sample size as draws")
    session.plan = plan
    session.state = PLANNED
    payload["plan"] = plan.to_json()
    payload["election_hash"] = hashlib.sha256(encode_election(session.contest).encode()).hexdigest()
    return payload


def _on_seed(session: Session, payload: dict) -> dict:
    _require_state(session, PLANNED)
    seed = SeedRecord.from_json(payload["seed"])
    if not seed.committed_after_results:
        raise SessionError("SEED_NOT_ATTESTED", "the seed must be committed after subtotals are public")
    session.seed = seed
    session.state = SEED_COMMITTED
    payload["seed"] = seed.to_json()
    return payload


def _population(session: Session) -> dict[str, bounds_mod.ErrorBound]:
    assert session.contest is not None and session.plan is not None
    all_b = session.bounds()
    plan = session.plan
    if plan.method == STRATIFIED_WORST_CASE:
        assert plan.sample_sizes is not None
        sampled_strata = set(plan.sample_sizes)
        return {bid: b for bid, b in all_b.items() if session.contest.batch(bid).stratum in sampled_strata}
    if plan.method == EXEMPT_STRATUM_MRO:
        thr = plan.exempt_threshold_votes or 0
        return {bid: b for bid, b in all_b.items() if b.bound_votes > thr}
    return all_b


def _execute_draw(session: Session) -> DrawResult:
    assert session.plan is not None and session.seed is not None and session.contest is not None
    plan = session.plan
    if plan.method == POLICY:
        # rounds after the first add the batches the ladder demanded,
        # drawn from the not-yet-sampled remainder
        if session.state == ESCALATED:
            add = int((session.assessment or {}).get("add_units", 0))
            if add < 1:
                raise SessionError("ILLEGAL_TRANSITION", "the ladder did not ask for more batches")
            remaining = sorted(b.id for b in session.contest.batches if b.id not in session.sample_times)
            return draw_srs(remaining, min(add, len(remaining)), session.seed,
                            namespace=f"round:{session.round + 1}")
        assert plan.draws is not None
        return draw_srs(sorted(b.id for b in session.contest.batches), plan.draws, session.seed)
    pop = _population(session)
    suffix = "" if session.round == 0 else f"round:{session.round}:"
    if plan.method == STRATIFIED_WORST_CASE:
        assert plan.sample_sizes is not None
        strata: dict[str, list[str]] = {}
        for bid in pop:
            strata.setdefault(session.contest.batch(bid).stratum, []).append(bid)
        sizes = dict(plan.sample_sizes)
        if suffix:
            return draw_stratified({f"{suffix}{k}": v for k, v in strata.items()},
                                   {f"{suffix}{k}": v for k, v in sizes.items()}, session.seed)
        return draw_stratified(strata, sizes, session.seed)
    if plan.method == EXEMPT_STRATUM_MRO:
        assert plan.draws is not None
        return draw_srs(sorted(pop), plan.draws, session.seed, namespace=suffix.rstrip(":"))
    assert plan.draws is not None
    weights = [(bid, b.bound_relative) for bid, b in pop.items() if b.bound_relative > 0]
    return draw_ppeb(weights, plan.draws, session.seed)


def _on_draw(session: Session, payload: dict) -> dict:
    _require_state(session, SEED_COMMITTED, ESCALATED)
    if session.seed is None:
        raise SessionError("ILLEGAL_TRANSITION", "no seed committed before the draw")
    source = payload.get("source", "engine")
    payload["source"] = source
    if source == "engine":
        result = _execute_draw(session)
        payload["result"] = result.to_json()
    elif source == "external":
        result = DrawResult.from_json(payload["result"])
        known = {b.id for b in session.contest.batches} if session.contest else set()
        unknown = [s for s in result.selections if s not in known]
        if unknown:
            raise SessionError("UNKNOWN_BATCH", ", ".join(unknown))
        if result.method in ("SRS", "STRATIFIED") and len(set(result.selections)) != len(result.selections):
            raise SessionError("DUPLICATE_SELECTION", "SRS selections must be distinct")
        if (
            result.method == "PPEB"
            and session.plan is not None
            and session.plan.draws is not None
            and len(result.selections) != session.plan.draws
        ):
            raise SessionError("BAD_DRAW", f"PPEB draw must list exactly n={session.plan.draws} selections")
    else:
        raise SessionError("BAD_DRAW_SOURCE", source)
    session.draws.append(result)
    for bid, times in result.multiplicity().items():
        session.sample_times[bid] = session.sample_times.get(bid, 0) + times
    if session.state == ESCALATED:
        session.round += 1
    session.state = SAMPLE_DRAWN
    return payload


def _on_count(session: Session, payload: dict) -> dict:
    _require_state(session, SAMPLE_DRAWN, COUNTING)
    hc = HandCount.from_json(payload["count"])
    payload["count"] = hc.to_json()
    if hc.batch_id not in session.sample_times:
        raise SessionError("BATCH_NOT_IN_SAMPLE", hc.batch_id)
    if sum(hc.tallies.values()) > hc.counted_ballots:
        raise SessionError("BAD_COUNT", "tallies exceed counted ballots")
    if hc.batch_id in session.counts:
        raise SessionError("ALREADY_COUNTED", hc.batch_id)
    if hc.batch_id in session.mismatches and not session.mismatches[hc.batch_id][-1].get("resolved"):
        raise SessionError("UNRESOLVED_MISMATCH", hc.batch_id)
    first = session.pending_counts.get(hc.batch_id)
    if first is None:
        session.pending_counts[hc.batch_id] = payload["count"]
        payload["entry_no"] = 1
    else:
        same = (
            first["tallies"] == payload["count"]["tallies"]
            and int(first["counted_ballots"]) == hc.counted_ballots
        )
        del session.pending_counts[hc.batch_id]
        if same:
            session.counts[hc.batch_id] = hc
            session.count_rounds[hc.batch_id] = session.round
            payload["entry_no"] = 2
            payload["accepted"] = True
        else:
            session.mismatches.setdefault(hc.batch_id, []).append(
                {"first": first, "second": payload["count"], "resolved": False}
            )
            payload["entry_no"] = 2
            payload["accepted"] = False
            payload["mismatch"] = True
    session.state = COUNTING
    return payload


def _on_resolve_count(session: Session, payload: dict) -> dict:
    _require_state(session, COUNTING)
    hc = HandCount.from_json(payload["count"])
    payload["count"] = hc.to_json()
    history = session.mismatches.get(hc.batch_id)
    if not history or history[-1].get("resolved"):
        raise SessionError("NO_MISMATCH", hc.batch_id)
    history[-1]["resolved"] = True
    session.counts[hc.batch_id] = hc
    session.count_rounds[hc.batch_id] = session.round
    return payload


def _on_reveal(session: Session, payload: dict) -> dict:
    _require_state(session, SAMPLE_DRAWN, COUNTING)
    assert session.contest is not None
    bid = payload["batch_id"]
    if bid not in session.sample_times:
        raise SessionError("BATCH_NOT_IN_SAMPLE", bid)
    if session.contest.batch(bid).subtotals is not None:
        raise SessionError("NOT_A_DECK", f"batch {bid} already has reported subtotals")
    session.reveals[bid] = {k: int(v) for k, v in payload["subtotals"].items()}
    payload["subtotals"] = dict(sorted(session.reveals[bid].items()))
    return payload


def _policy_assessment(session: Session) -> tuple[risk.Verdict, dict]:
    """Statutory ladders: map the rule's action onto the verdict space.
    A statutory STOP is recorded as CERTIFY with no statistic — these
    procedures carry no risk guarantee, and the narrative says so."""
    from . import policy as policy_mod

    assert session.contest is not None and session.plan is not None
    contest, plan = session.contest, session.plan
    book = policy_mod.Rulebook.bundled()
    rule = book.rule(plan.policy_id)
    # ladder triggers look at the error found by the current round's
    # counting (an escalation asks whether the expansion found more error,
    # not whether the already-known error is still there)
    audited = []
    for bid in session.sampled_ids():
        if session.count_rounds.get(bid) != session.round:
            continue
        batch = contest.batch(bid)
        reported = session.reveals.get(bid, batch.subtotals)
        if reported is None:
            raise SessionError("INCOMPLETE_COUNTS", f"deck {bid} has no revealed subtotals")
        audited.append((reported, session.counts[bid].tallies, batch.ballots))
    metrics = policy_mod.escalation_metrics(
        audited, small_precinct_ballots=int(rule.get("small_precinct_ballots", 400))
    )
    state = policy_mod.EscalationState(round=session.round, **metrics)
    stats = policy_mod.ContestStats(
        precincts=len(contest.batches), machines=len(contest.batches),
        batches=len(contest.batches), ballots=contest.total_ballots(),
    )
    action = book.escalation_step(plan.policy_id, state, stats)
    details = {
        "method": POLICY,
        "policy_id": plan.policy_id,
        "action": action.kind,
        "add_units": action.add_units,
        "metrics": {
            "discrepancy_fraction": frac_str(metrics["discrepancy_fraction"]),
            "small_precinct_vote_diff": metrics["small_precinct_vote_diff"],
            "vote_share_shift": frac_str(metrics["vote_share_shift"]),
            "erroneous_machine_fraction": frac_str(metrics["erroneous_machine_fraction"]),
            "outcome_changed": metrics["outcome_changed"],
        },
    }
    rule_name = rule.get("name", plan.policy_id)
    if action.kind in (policy_mod.FULL_COUNT, policy_mod.COUNTY_FULL_COUNT):
        verdict = risk.Verdict(
            risk.ESCALATE_TO_FULL_COUNT, None,
            f"{rule_name} ladder requires a full hand count. {action.note}".strip(),
        )
    elif action.kind == policy_mod.STOP:
        verdict = risk.Verdict(
            risk.CERTIFY, None,
            f"{rule_name} statutory tally complete after round {session.round + 1}; "
            "this procedure does not limit the risk of an incorrect outcome.",
        )
    elif action.kind == policy_mod.ADD:
        verdict = risk.Verdict(
            risk.EXPAND, None,
            f"{rule_name} ladder expands the audit by {action.add_units} {action.unit or 'batches'}.",
        )
    else:  # UNSPECIFIED / RECOUNT: the statute leaves the next step to people
        verdict = risk.Verdict(
            risk.EXPAND, None,
            f"{rule_name} ladder action {action.kind}: {action.note or 'the statute does not specify what happens next; the operator must decide'}",
        )
    return verdict, details


def _compute_assessment(session: Session) -> tuple[risk.Verdict, dict]:
    assert session.contest is not None and session.plan is not None
    contest, plan = session.contest, session.plan
    if plan.method == POLICY:
        return _policy_assessment(session)
    margins = session.margins()
    all_b = session.bounds()
    alpha = plan.risk_limit

    overs: dict[str, bounds_mod.Overstatement] = {}
    for bid in session.sampled_ids():
        hc = session.counts[bid]
        reported = session.reveals.get(bid)
        overs[bid] = bounds_mod.observed_overstatement(
            contest.batch(bid), contest, hc, margins, all_b[bid], reported_subtotals=reported
        )
    exceeded = any(o.bound_exceeded for o in overs.values())

    if contest.rule.kind == SUPERMAJORITY:
        margin_votes = margins.supermajority_margin
        assert margin_votes is not None
    else:
        margin_votes = Fraction(margins.min_margin())

    details: dict[str, Any] = {
        "overstatements": {
            bid: {"votes": frac_str(o.e_max_votes), "taint": frac_str(o.taint)} for bid, o in overs.items()
        },
        "bound_exceeded": exceeded,
    }

    if plan.method == TRINOMIAL_PPEB:
        assert plan.taint_threshold is not None
        total = bounds_mod.total_relative_bound(all_b)
        taints: list[Fraction] = []
        for did, times in sorted(session.sample_times.items()):
            taints.extend([overs[did].taint] * times)
        outcome = risk.classify_taints(taints, plan.taint_threshold, total)
        verdict = risk.assess_trinomial(outcome, alpha, exceeded)
        details.update(
            {
                "method": plan.method,
                "draws": outcome.n,
                "categories": [outcome.k0, outcome.k1, outcome.k2],
                "taint_threshold": frac_str(plan.taint_threshold),
                "total_bound": frac_str(outcome.total_bound),
            }
        )
        return verdict, details

    pop = _population(session)
    exempt_total = sum(
        (b.bound_votes for bid, b in all_b.items() if bid not in pop), Fraction(0)
    )
    assert plan.allowance_votes is not None
    allowance = risk.AllowanceRule(plan.allowance_votes)
    b_star = risk.min_bad_batches(
        [b.bound_votes for b in pop.values()], margin_votes, exempt_total, allowance.per_batch_votes
    )
    if b_star is risk.INFEASIBLE:
        planned_risk = Fraction(0)
    elif plan.method == STRATIFIED_WORST_CASE:
        assert plan.sample_sizes is not None
        strata_sizes: dict[str, int] = {}
        for bid in pop:
            st = contest.batch(bid).stratum
            strata_sizes[st] = strata_sizes.get(st, 0) + 1
        labels = sorted(plan.sample_sizes)
        planned_risk = risk.worst_case_miss(
            [strata_sizes[s] for s in labels], [plan.sample_sizes[s] for s in labels], int(b_star)
        )
    else:
        assert plan.draws is not None
        planned_risk = risk.srs_miss_probability(len(pop), int(b_star), plan.draws)

    e_by_batch = {bid: o.e_max_votes for bid, o in overs.items()}
    verdict = risk.assess_worst_case(e_by_batch, allowance, planned_risk, alpha, exceeded)
    details.update(
        {
            "method": plan.method,
            "allowance_votes": allowance.per_batch_votes,
            "min_bad": "inf" if b_star is risk.INFEASIBLE else int(b_star),
            "exempt_worst_case": frac_str(exempt_total),
            "planned_risk": frac_str(planned_risk),
        }
    )
    return verdict, details


def _on_assess(session: Session, payload: dict) -> dict:
    _require_state(session, COUNTING)
    missing = [bid for bid in session.sampled_ids() if bid not in session.counts]
    if missing:
        raise SessionError("INCOMPLETE_COUNTS", f"not yet counted: {', '.join(missing)}")
    assert session.contest is not None
    unrevealed = [
        bid for bid in session.sampled_ids()
        if session.contest.batch(bid).subtotals is None and bid not in session.reveals
    ]
    if unrevealed:
        raise SessionError("INCOMPLETE_COUNTS", f"decks without revealed subtotals: {', '.join(unrevealed)}")
    verdict, details = _compute_assessment(session)
    recorded = payload.get("verdict")
    if recorded is not None and (
        recorded.get("decision") != verdict.decision
        or recorded.get("statistic") != verdict.to_json()["statistic"]
    ):
        raise SessionError("VERDICT_MISMATCH", "logged verdict does not match recomputation")
    session.verdict = verdict
    session.assessment = details
    session.state = ASSESSED
    payload["verdict"] = verdict.to_json()
    payload["details"] = details
    return payload


def _on_apply_verdict(session: Session, payload: dict) -> dict:
    _require_state(session, ASSESSED)
    assert session.verdict is not None
    decision = session.verdict.decision
    if decision == risk.CERTIFY:
        session.state = CERTIFIED
    elif decision == risk.ESCALATE_TO_FULL_COUNT:
        session.state = FULL_COUNT
    else:
        session.state = ESCALATED
    payload["decision"] = decision
    return payload


def _on_full_count(session: Session, payload: dict) -> dict:
    _require_state(session, FULL_COUNT)
    session.full_count_tallies = {k: int(v) for k, v in payload["tallies"].items()}
    session.state = CERTIFIED
    return payload


def _on_close(session: Session, payload: dict) -> dict:
    _require_state(session, CERTIFIED)
    session.state = CLOSED
    return payload


_HANDLERS = {
    "contest": _on_contest,
    "plan": _on_plan,
    "seed": _on_seed,
    "draw": _on_draw,
    "count": _on_count,
    "resolve_count": _on_resolve_count,
    "reveal": _on_reveal,
    "assess": _on_assess,
    "apply_verdict": _on_apply_verdict,
    "full_count": _on_full_count,
    "close": _on_close,
}


# -- log persistence and replay -------------------------------------------


def verify_chain(entries: list[LogEntry]) -> int | None:
    """Index of the first broken entry, or None if the chain verifies."""
    prev = GENESIS
    for i, e in enumerate(entries):
        if e.seq != i or not e.verify(prev):
            return i
        prev = e.entry_hash
    return None


def replay(entries: list[LogEntry], session_id: str = "") -> Session:
    """Rebuild a session from its log, re-verifying hashes, transitions and
    every derived number (engine draws and verdicts are recomputed)."""
    broken = verify_chain(entries)
    if broken is not None:
        raise SessionError("CHAIN_BROKEN", str(broken))
    session = Session(id=session_id)
    for e in entries:
        payload = dict(e.payload)
        if e.kind == "contest" and "session_id" in payload:
            session.id = payload["session_id"]
        if e.kind == "draw" and payload.get("source", "engine") == "engine":
            expected = payload["result"]
            probe = dict(payload)
            del probe["result"]
            logged = _HANDLERS["draw"](session, probe)
            if logged["result"] != expected:
                raise SessionError("REPLAY_DIVERGENCE", f"engine draw at seq {e.seq} does not reproduce")
        else:
            _HANDLERS[e.kind](session, payload)
        session.entries.append(e)
        session.head_hash = e.entry_hash
    return session


def parse_log(text: str) -> list[LogEntry]:
    return [LogEntry.from_line(line) for line in text.splitlines() if line.strip()]


def dump_log(entries: list[LogEntry]) -> str:
    return "".join(e.to_line() + "\n" for e in entries)


# -- report -----------------------------------------------------------------


def _percent_audited(session: Session) -> str:
    assert session.contest is not None
    audited = session.ballots_audited()
    margins = session.margins()
    if session.contest.rule.kind == SUPERMAJORITY:
        denom = margins.valid_ballots  # margin convention: valid ballots
    else:
        denom = session.contest.total_ballots()
    return decimal_str(Fraction(audited * 100, denom), 0) + "%"


def report(session: Session) -> dict:
    """Full audit report: margins, bounds table, sample with trail,
    discrepancies with taints, the verdict, and workload figures."""
    if session.state not in (ASSESSED, ESCALATED, FULL_COUNT, CERTIFIED, CLOSED):
        raise SessionError("TOO_EARLY", "a report needs at least an assessed session")
    assert session.contest is not None and session.plan is not None
    contest = session.contest
    margins = session.margins()
    all_b = session.bounds()
    relative_decimals = 2 if contest.rule.kind == "plurality" else 3

    bounds_rows = []
    for bid in sorted(all_b):
        b = all_b[bid]
        batch = contest.batch(bid)
        bounds_rows.append(
            {
                "batch_id": bid,
                "ballots": batch.ballots,
                "stratum": batch.stratum,
                "scheme": b.scheme,
                "bound_votes": b.display_votes,
                "u_p": b.display_relative(relative_decimals),
                "audited": bid in session.counts,
            }
        )

    sample_rows = []
    for bid in session.sampled_ids():
        batch = contest.batch(bid)
        row: dict[str, Any] = {
            "batch_id": bid,
            "ballots": batch.ballots,
            "stratum": batch.stratum,
            "times": session.sample_times[bid],
            "u_p": all_b[bid].display_relative(relative_decimals),
        }
        hc = session.counts.get(bid)
        if hc is not None:
            reported = session.reveals.get(bid, batch.subtotals)
            over = bounds_mod.observed_overstatement(
                batch, contest, hc, margins, all_b[bid], reported_subtotals=session.reveals.get(bid)
            )
            row.update(
                {
                    "reported": dict(sorted((reported or {}).items())),
                    "actual": dict(sorted(hc.tallies.items())),
                    "mov": frac_str(over.e_max_votes),
                    "taint": over.display_taint(3),
                }
            )
        sample_rows.append(row)

    totals = contest.totals()
    doc = {
        "session": session.id,
        "state": session.state,
        "round": session.round + 1,
        "contest": {
            "id": contest.id,
            "title": contest.title,
            "rule": contest.rule.to_json(),
            "totals": dict(sorted(totals.items())),
            "total_ballots": contest.total_ballots(),
            "batches": len(contest.batches),
        },
        "margins": margins.to_json(),
        "plan": session.plan.to_json(),
        "seed": session.seed.to_json() if session.seed else None,
        "bounds": bounds_rows,
        "sample": {
            "rows": sample_rows,
            "draws": [d.to_json() for d in session.draws],
        },
        "assessment": session.assessment,
        "verdict": session.verdict.to_json() if session.verdict else None,
        "full_count_tallies": session.full_count_tallies,
        "workload": {
            "distinct_batches_audited": len(session.counts),
            "ballots_audited": session.ballots_audited(),
            "percent_audited": _percent_audited(session),
        },
        "log_head": session.head_hash,
    }
    return doc


def report_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def verdict_document(session: Session) -> dict:
    """Standalone verdict export for posting: the method, a hash of the
    exact inputs (the frozen canonical election), the statistic and the
    decision, sealed by a content hash chained to the log head."""
    if session.verdict is None or session.contest is None or session.plan is None:
        raise SessionError("TOO_EARLY", "no verdict to export yet")
    body = {
        "session": session.id,
        "method": session.plan.method,
        "risk_limit": frac_str(session.plan.risk_limit),
        "inputs_hash": hashlib.sha256(encode_election(session.contest).encode()).hexdigest(),
        "statistic": session.verdict.to_json()["statistic"],
        "decision": session.verdict.decision,
        "log_head": session.head_hash,
    }
    body["signature"] = hashlib.sha256(_canonical(body).encode()).hexdigest()
    return body


def report_tables_csv(doc: dict) -> str:
    """The report's bounds and sample tables as CSV for public posting."""
    lines = ["table,batch_id,ballots,stratum,scheme,bound_votes,u_p,times,mov,taint,audited"]
    for row in doc["bounds"]:
        lines.append(
            f"bounds,{row['batch_id']},{row['ballots']},{row['stratum']},{row['scheme']},"
            f"{row['bound_votes']},{row['u_p']},,,,{'yes' if row['audited'] else 'no'}"
        )
    for row in doc["sample"]["rows"]:
        lines.append(
            f"sample,{row['batch_id']},{row['ballots']},{row['stratum']},,,"
            f"{row['u_p']},{row['times']},{row.get('mov', '')},{row.get('taint', '')},yes"
        )
    return "\n".join(lines) + "\n"


def render_report_text(doc: dict) -> str:
    """Plain-text tables for posting alongside the JSON."""
    lines: list[str] = []
    c = doc["contest"]
    lines.append(f"Audit report — {c['title']} ({doc['session']})")
    lines.append(f"State: {doc['state']}   Round: {doc['round']}")
    totals = "  ".join(f"{k}={v}" for k, v in c["totals"].items())
    lines.append(f"Reported: {totals}   ballots={c['total_ballots']}")
    lines.append(f"Margins: {doc['margins']}")
    lines.append("")
    lines.append(f"{'Batch':<14}{'b_p':>7}{'Bound':>8}{'u_p':>9}  Audited")
    for row in doc["bounds"]:
        lines.append(
            f"{row['batch_id']:<14}{row['ballots']:>7}{row['bound_votes']:>8}{row['u_p']:>9}  "
            f"{'yes' if row['audited'] else 'no'}"
        )
    lines.append("")
    if doc["sample"]["rows"]:
        lines.append(f"{'Sampled':<14}{'times':>6}{'u_p':>9}{'MOV':>7}{'taint':>9}")
        for row in doc["sample"]["rows"]:
            lines.append(
                f"{row['batch_id']:<14}{row['times']:>6}{row['u_p']:>9}"
                f"{row.get('mov', '-'):>7}{row.get('taint', '-'):>9}"
            )
        lines.append("")
    v = doc["verdict"]
    if v:
        lines.append(f"Decision: {v['decision']}  statistic={v['statistic']}")
        lines.append(v["narrative"])
    w = doc["workload"]
    lines.append(
        f"Audited {w['ballots_audited']} ballots in {w['distinct_batches_audited']} batches "
        f"({w['percent_audited']} of the contest)."
    )
    return "\n".join(lines) + "\n"
