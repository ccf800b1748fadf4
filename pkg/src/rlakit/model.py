"""Canonical domain types for batch-comparison election audits.

Structure and validation only — no statistics live here.  A Contest is a
single race with a decision rule; a Batch is the smallest separately
retrievable group of ballots (precinct-by-mode, or a vote-by-mail deck
reported without subtotals).  The canonical on-disk form is versioned
JSON ("rla-canonical/1") with bit-exact integers and rationals encoded
as strings, so two machines always agree on the file's hash.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any

from .exact import frac_str, parse_frac

SCHEMA_VERSION = "rla-canonical/1"

MODES = ("IP", "VBM", "PROVISIONAL", "DECK")

PLURALITY = "plurality"
MAJORITY = "majority"
SUPERMAJORITY = "supermajority"


class ModelError(ValueError):
    """Raised for structurally unusable inputs (not mere findings)."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Rule:
    kind: str
    winners: int = 1
    fraction: Fraction | None = None  # supermajority threshold, e.g. 2/3

    def __post_init__(self):
        if self.kind not in (PLURALITY, MAJORITY, SUPERMAJORITY):
            raise ModelError("BAD_RULE", f"unknown rule kind {self.kind!r}")
        if self.kind == SUPERMAJORITY and self.fraction is None:
            raise ModelError("BAD_RULE", "supermajority rule needs a fraction")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == PLURALITY:
            out["winners"] = self.winners
        if self.fraction is not None:
            out["fraction"] = frac_str(self.fraction)
        return out

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "Rule":
        return Rule(
            kind=obj["kind"],
            winners=int(obj.get("winners", 1)),
            fraction=parse_frac(obj["fraction"]) if "fraction" in obj else None,
        )


@dataclass(frozen=True)
class Batch:
    """One auditable unit: `ballots` reported cast, optional per-candidate
    subtotals (absent for decks the EMS cannot break out)."""

    id: str
    mode: str
    stratum: str
    ballots: int
    subtotals: dict[str, int] | None = None

    @property
    def invalid_count(self) -> int | None:
        if self.subtotals is None:
            return None
        return self.ballots - sum(self.subtotals.values())

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "mode": self.mode,
            "stratum": self.stratum,
            "ballots": self.ballots,
        }
        if self.subtotals is not None:
            out["subtotals"] = dict(sorted(self.subtotals.items()))
        return out

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "Batch":
        subtotals = obj.get("subtotals")
        return Batch(
            id=obj["id"],
            mode=obj["mode"],
            stratum=obj["stratum"],
            ballots=int(obj["ballots"]),
            subtotals={k: int(v) for k, v in subtotals.items()} if subtotals is not None else None,
        )


@dataclass(frozen=True)
class Contest:
    id: str
    title: str
    rule: Rule
    candidates: tuple[str, ...]
    batches: tuple[Batch, ...]
    eligible_fraction: Fraction = Fraction(1)
    # County-wide reported totals.  Required when some batches lack
    # subtotals (deck contests); otherwise derived from the batches.
    reported_totals: dict[str, int] | None = None

    def totals(self) -> dict[str, int]:
        if self.reported_totals is not None:
            return dict(self.reported_totals)
        sums = {c: 0 for c in self.candidates}
        for b in self.batches:
            if b.subtotals:
                for c, v in b.subtotals.items():
                    sums[c] = sums.get(c, 0) + v
        return sums

    def total_ballots(self) -> int:
        return sum(b.ballots for b in self.batches)

    def batch(self, batch_id: str) -> Batch:
        for b in self.batches:
            if b.id == batch_id:
                return b
        raise ModelError("UNKNOWN_BATCH", batch_id)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "title": self.title,
            "rule": self.rule.to_json(),
            "candidates": list(self.candidates),
            "eligible_fraction": frac_str(self.eligible_fraction),
        }
        if self.reported_totals is not None:
            out["reported_totals"] = dict(sorted(self.reported_totals.items()))
        return out

    @staticmethod
    def from_json(obj: dict[str, Any], batches: list[Batch]) -> "Contest":
        totals = obj.get("reported_totals")
        return Contest(
            id=obj["id"],
            title=obj["title"],
            rule=Rule.from_json(obj["rule"]),
            candidates=tuple(obj["candidates"]),
            batches=tuple(batches),
            eligible_fraction=parse_frac(obj.get("eligible_fraction", "1")),
            reported_totals={k: int(v) for k, v in totals.items()} if totals is not None else None,
        )


@dataclass(frozen=True)
class HandCount:
    batch_id: str
    counted_ballots: int
    tallies: dict[str, int]
    entered_by: str
    timestamp: str

    def to_json(self) -> dict[str, Any]:
        return {
            "batch_id": self.batch_id,
            "counted_ballots": self.counted_ballots,
            "tallies": dict(sorted(self.tallies.items())),
            "entered_by": self.entered_by,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "HandCount":
        return HandCount(
            batch_id=obj["batch_id"],
            counted_ballots=int(obj["counted_ballots"]),
            tallies={k: int(v) for k, v in obj["tallies"].items()},
            entered_by=obj["entered_by"],
            timestamp=obj["timestamp"],
        )


@dataclass(frozen=True)
class MarginSet:
    """Pairwise winner-loser margins in votes, plus the votes-above-threshold
    margin for supermajority measures (computed on valid ballots only)."""

    pairwise: dict[tuple[str, str], int]
    valid_ballots: int
    supermajority_margin: Fraction | None = None

    def min_margin(self) -> int:
        return min(self.pairwise.values())

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "pairwise": {f"{w}>{l}": m for (w, l), m in sorted(self.pairwise.items())},
            "valid_ballots": self.valid_ballots,
        }
        if self.supermajority_margin is not None:
            out["supermajority_margin"] = frac_str(self.supermajority_margin)
        return out


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    where: str = ""


# Audit methods named by what they do, matching the planner/assessor pairs
# in rlakit.risk and the statutory rules in rlakit.policy.
STRATIFIED_WORST_CASE = "STRATIFIED_WORST_CASE"
EXEMPT_STRATUM_MRO = "EXEMPT_STRATUM_MRO"
TRINOMIAL_PPEB = "TRINOMIAL_PPEB"
POLICY = "POLICY"

METHODS = (STRATIFIED_WORST_CASE, EXEMPT_STRATUM_MRO, TRINOMIAL_PPEB, POLICY)


@dataclass(frozen=True)
class AuditPlan:
    risk_limit: Fraction
    method: str
    allowance_votes: int | None = None          # a: per-batch overstatement ignored
    taint_threshold: Fraction | None = None     # d: trinomial category split
    draws: int | None = None                    # n: PPEB draws
    exempt_threshold_votes: int | None = None   # bound at or below which a batch is exempt
    sample_sizes: dict[str, int] | None = None  # per-stratum n_h for SRS methods
    policy_id: str | None = None
    seed_commitment: bool = True

    def __post_init__(self):
        if not (0 < self.risk_limit < 1):
            raise ModelError("BAD_PLAN", "risk limit must be in (0,1)")
        if self.method not in METHODS:
            raise ModelError("BAD_PLAN", f"unknown method {self.method!r}")
        if self.method == TRINOMIAL_PPEB:
            if self.draws is None or self.draws < 1:
                raise ModelError("BAD_PLAN", "trinomial method needs draws n >= 1")
            if self.taint_threshold is None or not (0 < self.taint_threshold < 1):
                raise ModelError("BAD_PLAN", "trinomial method needs d in (0,1)")
        if self.method in (STRATIFIED_WORST_CASE, EXEMPT_STRATUM_MRO):
            if self.allowance_votes is None or self.allowance_votes < 0:
                raise ModelError("BAD_PLAN", "worst-case methods need allowance a >= 0")
        if self.method == POLICY and not self.policy_id:
            raise ModelError("BAD_PLAN", "policy method needs policy_id")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "risk_limit": frac_str(self.risk_limit),
            "method": self.method,
            "seed_commitment": self.seed_commitment,
        }
        if self.allowance_votes is not None:
            out["allowance_votes"] = self.allowance_votes
        if self.taint_threshold is not None:
            out["taint_threshold"] = frac_str(self.taint_threshold)
        if self.draws is not None:
            out["draws"] = self.draws
        if self.exempt_threshold_votes is not None:
            out["exempt_threshold_votes"] = self.exempt_threshold_votes
        if self.sample_sizes is not None:
            out["sample_sizes"] = dict(sorted(self.sample_sizes.items()))
        if self.policy_id is not None:
            out["policy_id"] = self.policy_id
        return out

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "AuditPlan":
        return AuditPlan(
            risk_limit=parse_frac(obj["risk_limit"]),
            method=obj["method"],
            allowance_votes=obj.get("allowance_votes"),
            taint_threshold=parse_frac(obj["taint_threshold"]) if "taint_threshold" in obj else None,
            draws=obj.get("draws"),
            exempt_threshold_votes=obj.get("exempt_threshold_votes"),
            sample_sizes=obj.get("sample_sizes"),
            policy_id=obj.get("policy_id"),
            seed_commitment=bool(obj.get("seed_commitment", True)),
        )


def validate_contest(contest: Contest) -> list[Finding]:
    """Check every structural invariant; returns findings, never raises.

    An empty list means the contest is safe for every downstream module.
    """
    findings: list[Finding] = []
    if len(contest.candidates) < 2:
        findings.append(Finding("TOO_FEW_CANDIDATES", "a contest needs at least two candidates", contest.id))
    if len(set(contest.candidates)) != len(contest.candidates):
        findings.append(Finding("DUPLICATE_CANDIDATE", "candidate ids must be unique", contest.id))
    if not (0 < contest.eligible_fraction <= 1):
        findings.append(Finding("BAD_ELIGIBLE_FRACTION", "eligible fraction must be in (0,1]", contest.id))
    if contest.rule.kind == SUPERMAJORITY:
        f = contest.rule.fraction
        if f is None or not (Fraction(1, 2) < f < 1):
            findings.append(Finding("BAD_SUPERMAJORITY_FRACTION", "supermajority fraction must be in (1/2,1)", contest.id))
    if contest.rule.kind == PLURALITY and contest.rule.winners != 1:
        findings.append(Finding("UNSUPPORTED_WINNERS", "only single-winner plurality contests are supported", contest.id))

    seen: set[str] = set()
    known = set(contest.candidates)
    for b in contest.batches:
        if b.id in seen:
            findings.append(Finding("DUPLICATE_BATCH_ID", "batch ids must be unique within a contest", b.id))
        seen.add(b.id)
        if b.mode not in MODES:
            findings.append(Finding("BAD_MODE", f"unknown mode {b.mode!r}", b.id))
        if b.ballots < 0:
            findings.append(Finding("NEGATIVE_BALLOTS", "ballot count cannot be negative", b.id))
        if b.subtotals is not None:
            for cand, v in b.subtotals.items():
                if cand not in known:
                    findings.append(Finding("UNKNOWN_CANDIDATE", f"subtotal for unknown candidate {cand!r}", b.id))
                if v < 0:
                    findings.append(Finding("NEGATIVE_SUBTOTAL", f"negative subtotal for {cand!r}", b.id))
            if sum(b.subtotals.values()) > b.ballots:
                findings.append(Finding("SUBTOTAL_EXCEEDS_BALLOTS", "candidate subtotals exceed reported ballots", b.id))

    if contest.reported_totals is not None:
        for cand in contest.reported_totals:
            if cand not in known:
                findings.append(Finding("UNKNOWN_CANDIDATE", f"reported total for unknown candidate {cand!r}", contest.id))
    return findings


def encode_election(contest: Contest) -> str:
    """Canonical file bytes: sorted keys, two-space indent, trailing newline.

    Batches are ordered by id so the encoding is independent of input order.
    """
    doc = {
        "schema": SCHEMA_VERSION,
        "contest": contest.to_json(),
        "batches": [b.to_json() for b in sorted(contest.batches, key=lambda b: b.id)],
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def decode_election(text: str | bytes) -> Contest:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA_VERSION:
        raise ModelError("BAD_SCHEMA", f"expected {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    batches = [Batch.from_json(b) for b in doc["batches"]]
    return Contest.from_json(doc["contest"], batches)


def with_batches(contest: Contest, batches: list[Batch]) -> Contest:
    return replace(contest, batches=tuple(batches))
