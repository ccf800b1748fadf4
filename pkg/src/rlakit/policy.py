"""Statutory audit rules as data, plus the bare-bones random full count.

Fixed-percentage and tiered tallies do not limit risk — they stop no
matter what they find unless an escalation ladder fires — but they are
the law in many states, so the engine can run them side by side with
the risk-limiting methods.  The rulebook (statutes.json) encodes each
state's initial sample and its discrepancy ladder; statutes that leave
the escalation undefined map to an explicit UNSPECIFIED action that the
operator has to resolve, because inventing semantics for vague election
law is worse than surfacing the vagueness.

The bare-bones scheme is the one rule here that does limit risk: every
race gets a full hand count with probability

    P_r = f_r / 20 + 1 / (1000 * m_r)

(f_r the eligible-voter fraction, m_r the margin as a fraction, clamped
to 1), decided by the public seeded PRNG.  The decision ignores what
the audit finds, so the full-count chance is the same whether or not
the outcome is wrong — inefficient, but exactly the guarantee claimed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .exact import parse_frac
from .model import ModelError
from .sampling import SeedRecord, prng_stream

STOP = "STOP"
ADD = "ADD"
FULL_COUNT = "FULL_COUNT"
UNSPECIFIED = "UNSPECIFIED"
RECOUNT = "RECOUNT"
COUNTY_FULL_COUNT = "COUNTY_FULL_COUNT"


class PolicyError(ModelError):
    pass


@dataclass(frozen=True)
class ContestStats:
    precincts: int = 0
    machines: int = 0
    ballots: int = 0
    batches: int = 0
    registered_voters: int = 0
    margin_fraction: Fraction = Fraction(1)

    def units(self, unit: str) -> int:
        value = getattr(self, unit, None)
        if value is None or value <= 0:
            raise PolicyError("UNSUPPORTED_UNIT", f"no {unit} in contest stats")
        return value


@dataclass(frozen=True)
class EscalationState:
    """Metrics derived solely from logged hand counts."""

    round: int = 0
    discrepancy_fraction: Fraction = Fraction(0)   # |hand-machine| / machine votes, audited batches
    small_precinct_vote_diff: int = 0              # max vote diff in precincts under the size cutoff
    vote_share_shift: Fraction = Fraction(0)
    erroneous_machine_fraction: Fraction = Fraction(0)
    cross_county_vote_share: Fraction = Fraction(0)
    outcome_changed: bool = False

    def metric(self, name: str) -> Fraction:
        if name == "outcome_changed":
            return Fraction(1 if self.outcome_changed else 0)
        value = getattr(self, name, None)
        if value is None:
            raise PolicyError("UNKNOWN_RULE", f"no metric named {name}")
        return Fraction(value)


@dataclass(frozen=True)
class Action:
    kind: str
    add_units: int = 0
    unit: str = ""
    note: str = ""


class Rulebook:
    def __init__(self, doc: dict):
        if doc.get("schema") != "rla-statutes/1":
            raise PolicyError("BAD_SCHEMA", str(doc.get("schema")))
        self.rules = doc["rules"]

    @staticmethod
    def bundled() -> "Rulebook":
        text = resources.files("rlakit").joinpath("statutes.json").read_text("utf-8")
        return Rulebook(json.loads(text))

    @staticmethod
    def from_file(path: str) -> "Rulebook":
        with open(path, encoding="utf-8") as fh:
            return Rulebook(json.load(fh))

    def rule(self, rule_id: str) -> dict:
        if rule_id not in self.rules:
            raise PolicyError("UNKNOWN_RULE", rule_id)
        return self.rules[rule_id]

    # -- initial sample ---------------------------------------------------

    def initial_sample_size(self, rule_id: str, stats: ContestStats) -> int:
        rule = self.rule(rule_id)
        init = rule["initial"]
        kind = init["kind"]
        if kind == "FIXED_COUNT":
            return int(init["count"])
        if kind == "FIXED_PERCENT":
            units = stats.units(init["unit"])
            size = math.ceil(parse_frac(init["share"]) * units)
            return max(size, int(init.get("min_units", 0)))
        if kind == "TIERED_BY_MARGIN":
            units = stats.units(init["unit"])
            for tier in init["tiers"]:
                if stats.margin_fraction > parse_frac(tier["margin_gt"]):
                    return math.ceil(parse_frac(tier["share"]) * units)
            raise PolicyError("UNKNOWN_RULE", "margin matched no tier")
        if kind == "BY_REGISTERED_VOTERS":
            units = stats.units(init["unit"])
            for tier in init["tiers"]:
                if stats.registered_voters > int(tier["registered_gt"]):
                    return max(int(tier["count"]), math.ceil(parse_frac(tier["or_share"]) * units))
            raise PolicyError(
                "UNSPECIFIED", "statute does not fully specify this jurisdiction size; operator must decide"
            )
        raise PolicyError("UNKNOWN_RULE", kind)

    # -- escalation ladder -------------------------------------------------

    def escalation_step(self, rule_id: str, state: EscalationState, stats: ContestStats | None = None) -> Action:
        rule = self.rule(rule_id)
        ladder = rule.get("ladder", [])
        if state.round >= len(ladder):
            return Action(STOP)
        step = ladder[state.round]
        fired = False
        for trig in step["triggers"]:
            value = state.metric(trig["metric"])
            if "gte" in trig and value >= parse_frac(trig["gte"]):
                fired = True
            if "gt" in trig and value > parse_frac(trig["gt"]):
                fired = True
        if not fired:
            return Action(STOP)
        action = step["action"]
        kind = action["kind"]
        if kind == "FULL_COUNT":
            return Action(FULL_COUNT, note=action.get("note", ""))
        if kind == "COUNTY_FULL_COUNT":
            return Action(COUNTY_FULL_COUNT, note=action.get("note", ""))
        if kind == "RECOUNT":
            return Action(RECOUNT, note=action.get("note", ""))
        if kind == "UNSPECIFIED":
            return Action(UNSPECIFIED, note=action.get("note", ""))
        if kind == "ADD_COUNT":
            return Action(ADD, add_units=int(action["count"]), unit=action.get("unit", ""))
        if kind == "ADD_PERCENT":
            if stats is None:
                raise PolicyError("UNSUPPORTED_UNIT", "percent escalation needs contest stats")
            units = stats.units(action["unit"])
            return Action(ADD, add_units=math.ceil(parse_frac(action["share"]) * units), unit=action["unit"])
        raise PolicyError("UNKNOWN_RULE", kind)


def escalation_metrics(
    audited: list[tuple[dict[str, int], dict[str, int], int]],
    small_precinct_ballots: int = 400,
) -> dict:
    """Discrepancy metrics from audited batches: (reported tallies, hand
    tallies, ballots) triples.  Defined per the rulebook convention:
    |hand - machine| total votes over machine votes, both summed over the
    audited batches only.
    """
    votes_diff = 0
    votes_machine = 0
    erroneous = 0
    small_diff = 0
    rep_winner_votes: dict[str, int] = {}
    hand_winner_votes: dict[str, int] = {}
    for reported, hand, ballots in audited:
        diff = sum(abs(hand.get(c, 0) - reported.get(c, 0)) for c in set(reported) | set(hand))
        votes_diff += diff
        votes_machine += sum(reported.values())
        if diff:
            erroneous += 1
        if ballots <= small_precinct_ballots:
            small_diff = max(small_diff, diff)
        for c, v in reported.items():
            rep_winner_votes[c] = rep_winner_votes.get(c, 0) + v
        for c, v in hand.items():
            hand_winner_votes[c] = hand_winner_votes.get(c, 0) + v

    def share(votes: dict[str, int], cand: str) -> Fraction:
        total = sum(votes.values())
        return Fraction(votes.get(cand, 0), total) if total else Fraction(0)

    rep_winner = max(rep_winner_votes, key=lambda c: (rep_winner_votes[c], c), default="")
    hand_winner = max(hand_winner_votes, key=lambda c: (hand_winner_votes[c], c), default="")
    shift = abs(share(rep_winner_votes, rep_winner) - share(hand_winner_votes, rep_winner))
    return {
        "discrepancy_fraction": Fraction(votes_diff, votes_machine) if votes_machine else Fraction(0),
        "small_precinct_vote_diff": small_diff,
        "vote_share_shift": shift,
        "erroneous_machine_fraction": Fraction(erroneous, len(audited)) if audited else Fraction(0),
        "cross_county_vote_share": Fraction(0),  # single-jurisdiction engine
        "outcome_changed": bool(rep_winner) and rep_winner != hand_winner,
    }


def wpm_detection_sample_size(
    margin_fraction: Fraction,
    batches: int,
    wpm: Fraction = Fraction(1, 5),
    confidence: Fraction = Fraction(9, 10),
) -> int:
    """OPTIMISTIC-ASSUMPTION DIAGNOSTIC, not a guarantee.

    Detection-paradigm sample size under a within-precinct-miscount cap:
    assume no batch can misstate more than `wpm` of its ballots (two
    votes of margin per flipped ballot), so a wrong outcome needs at
    least ceil(margin / 2*wpm) of the batches to hold error, and size an
    SRS for the stated chance of catching one.  The cap has no empirical
    or theoretical support — error CAN affect every ballot in a batch —
    so audits built on this number understate the true risk.  Shipped
    only so the optimistic figure can be compared against the rigorous
    planners.
    """
    if not (0 < wpm <= 1) or not (0 < confidence < 1) or batches <= 0:
        raise PolicyError("BAD_FRACTION", "wpm in (0,1], confidence in (0,1), batches > 0")
    if margin_fraction <= 0:
        raise PolicyError("ZERO_MARGIN", "margin fraction must be positive")
    bad = min(batches, math.ceil(batches * margin_fraction / (2 * wpm)))
    miss_cap = 1 - confidence
    miss = Fraction(1)
    for n in range(batches + 1):
        if miss <= miss_cap:
            return n
        miss = miss * (batches - bad - n) / (batches - n) if batches - n > bad else Fraction(0)
    return batches


def modest_proposal_probability(eligible_fraction: Fraction, margin_fraction: Fraction) -> Fraction:
    """Full-hand-count probability f/20 + 1/(1000*m), clamped to 1."""
    if margin_fraction == 0:
        raise PolicyError("ZERO_MARGIN", "a tied race goes to the statutory full recount, not the lottery")
    if not (0 < eligible_fraction <= 1) or not (0 < margin_fraction <= 1):
        raise PolicyError("BAD_FRACTION", "fractions must be in (0,1]")
    p = eligible_fraction / 20 + Fraction(1, 1000) / margin_fraction
    return min(p, Fraction(1))


def modest_proposal_decision(
    eligible_fraction: Fraction, margin_fraction: Fraction, seed: SeedRecord, race_id: str
) -> tuple[bool, Fraction]:
    """Draw the full-count decision from the public stream; the race id
    namespaces the stream so one seed can serve a whole election."""
    p = modest_proposal_probability(eligible_fraction, margin_fraction)
    stream = prng_stream(seed, namespace=f"modest:{race_id}")
    hit = stream.uniform(p.denominator) < p.numerator
    return hit, p
