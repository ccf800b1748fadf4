"""Core domain types: validation findings and canonical serialization."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlakit.model import (
    AuditPlan,
    Batch,
    Contest,
    ModelError,
    Rule,
    decode_election,
    encode_election,
    validate_contest,
)


def make_contest(batches, candidates=("YES", "NO"), rule=None):
    return Contest(
        id="c1", title="Test", rule=rule or Rule("majority"),
        candidates=tuple(candidates), batches=tuple(batches),
    )


class TestValidateContest:
    def test_marin_a_fixture_is_clean(self, marin_a):
        assert validate_contest(marin_a) == []

    def test_subtotal_exceeding_ballots_is_flagged(self):
        bad = Batch("p1-IP", "IP", "IP", 391, {"YES": 300, "NO": 100})
        findings = validate_contest(make_contest([bad]))
        assert any(f.code == "SUBTOTAL_EXCEEDS_BALLOTS" and f.where == "p1-IP" for f in findings)

    def test_single_candidate_contest(self):
        contest = make_contest([Batch("p1-IP", "IP", "IP", 10, {"YES": 5})], candidates=("YES",))
        assert any(f.code == "TOO_FEW_CANDIDATES" for f in validate_contest(contest))

    def test_duplicate_batch_ids(self):
        batches = [Batch("p1-IP", "IP", "IP", 10, {"YES": 5, "NO": 2})] * 2
        assert any(f.code == "DUPLICATE_BATCH_ID" for f in validate_contest(make_contest(batches)))

    def test_supermajority_fraction_must_exceed_half(self):
        contest = make_contest(
            [Batch("p1-IP", "IP", "IP", 10, {"YES": 5, "NO": 2})],
            rule=Rule("supermajority", fraction=Fraction(1, 3)),
        )
        assert any(f.code == "BAD_SUPERMAJORITY_FRACTION" for f in validate_contest(contest))

    def test_unknown_candidate_in_subtotals(self):
        contest = make_contest([Batch("p1-IP", "IP", "IP", 10, {"MAYBE": 5, "NO": 2})])
        assert any(f.code == "UNKNOWN_CANDIDATE" for f in validate_contest(contest))


# Mutations that each break exactly one invariant of a valid contest.
_MUTATIONS = {
    "subtotals_over_ballots": lambda c: make_contest(
        [Batch("p1-IP", "IP", "IP", 5, {"YES": 4, "NO": 3})]
    ),
    "negative_ballots": lambda c: make_contest([Batch("p1-IP", "IP", "IP", -1, {"YES": 0, "NO": 0})]),
    "bad_mode": lambda c: make_contest([Batch("p1-IP", "FAX", "IP", 5, {"YES": 1, "NO": 1})]),
    "dup_candidates": lambda c: make_contest(
        [Batch("p1-IP", "IP", "IP", 5, {"YES": 1, "NO": 1})], candidates=("YES", "YES")
    ),
}


@pytest.mark.parametrize("name", sorted(_MUTATIONS))
def test_broken_invariant_yields_a_finding(name):
    mutated = _MUTATIONS[name](None)
    assert validate_contest(mutated), f"mutation {name} produced no findings"


_cand = st.sampled_from(["YES", "NO"])


@st.composite
def contests(draw):
    n = draw(st.integers(min_value=1, max_value=6))
    batches = []
    for i in range(n):
        ballots = draw(st.integers(min_value=0, max_value=500))
        yes = draw(st.integers(min_value=0, max_value=ballots))
        no = draw(st.integers(min_value=0, max_value=ballots - yes))
        mode = draw(st.sampled_from(["IP", "VBM"]))
        has_sub = draw(st.booleans())
        batches.append(
            Batch(f"p{i}-{mode}", mode, mode, ballots, {"YES": yes, "NO": no} if has_sub else None)
        )
    totals = {"YES": draw(st.integers(0, 10000)), "NO": draw(st.integers(0, 10000))}
    return Contest(
        id="prop", title="Property", rule=Rule("majority"),
        candidates=("YES", "NO"), batches=tuple(batches),
        reported_totals=totals if draw(st.booleans()) else None,
    )


@given(contests())
@settings(max_examples=100, deadline=None)
def test_serialization_round_trip(contest):
    assert decode_election(encode_election(contest)) == contest


@given(contests())
@settings(max_examples=50, deadline=None)
def test_encoding_is_canonical(contest):
    # batch order in memory must not affect the file bytes
    shuffled = Contest(
        id=contest.id, title=contest.title, rule=contest.rule,
        candidates=contest.candidates, batches=tuple(reversed(contest.batches)),
        reported_totals=contest.reported_totals,
    )
    assert encode_election(shuffled) == encode_election(contest)


class TestAuditPlan:
    def test_alpha_out_of_range(self):
        with pytest.raises(ModelError):
            AuditPlan(risk_limit=Fraction(0), method="TRINOMIAL_PPEB", draws=1, taint_threshold=Fraction(1, 10))

    def test_trinomial_requires_draws_and_threshold(self):
        with pytest.raises(ModelError):
            AuditPlan(risk_limit=Fraction(1, 4), method="TRINOMIAL_PPEB")

    def test_round_trip(self):
        plan = AuditPlan(
            risk_limit=Fraction(1, 4), method="TRINOMIAL_PPEB",
            draws=19, taint_threshold=Fraction(47, 1000),
        )
        assert AuditPlan.from_json(plan.to_json()) == plan

    def test_bad_schema_rejected(self):
        with pytest.raises(ModelError):
            decode_election('{"schema": "other/9", "contest": {}, "batches": []}')


def test_hand_count_round_trip():
    from rlakit.model import HandCount

    hc = HandCount("1005-IP", 556, {"LEOPOLD": 304, "DANNER": 170}, "alice", "2008-11-26T12:00:00Z")
    assert HandCount.from_json(hc.to_json()) == hc


def test_seed_record_round_trip():
    from rlakit.sampling import SeedRecord

    seed = SeedRecord(digits="486035", committed_at="2008-11-21T10:00:00Z")
    assert SeedRecord.from_json(seed.to_json()) == seed
