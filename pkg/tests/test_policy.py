"""Statutory rulebook evaluation and the bare-bones full-count lottery."""

from fractions import Fraction as F

import pytest

from rlakit.policy import (
    ADD,
    FULL_COUNT,
    STOP,
    UNSPECIFIED,
    ContestStats,
    EscalationState,
    PolicyError,
    Rulebook,
    modest_proposal_decision,
    modest_proposal_probability,
)
from rlakit.sampling import SeedRecord


@pytest.fixture(scope="module")
def book():
    return Rulebook.bundled()


class TestInitialSampleSize:
    def test_california_small_race_floor(self, book):
        # 1% of a 4-precinct race still audits one whole precinct: a 25% audit
        assert book.initial_sample_size("CA", ContestStats(precincts=4)) == 1

    def test_california_large(self, book):
        assert book.initial_sample_size("CA", ContestStats(precincts=350)) == 4  # ceil(3.5)

    def test_oregon_tier_between_one_and_two_percent(self, book):
        stats = ContestStats(precincts=100, margin_fraction=F(3, 200))  # 1.5%
        assert book.initial_sample_size("OR", stats) == 5

    def test_oregon_tiers_cover_all_margins(self, book):
        for margin in (F(1, 1000), F(1, 100), F(3, 200), F(1, 50), F(1, 10), F(1)):
            stats = ContestStats(precincts=100, margin_fraction=margin)
            assert book.initial_sample_size("OR", stats) in (3, 5, 10)

    def test_zero_units_unsupported(self, book):
        with pytest.raises(PolicyError) as err:
            book.initial_sample_size("CA", ContestStats(precincts=0))
        assert err.value.code == "UNSUPPORTED_UNIT"

    def test_minnesota_large_jurisdiction(self, book):
        stats = ContestStats(precincts=200, registered_voters=150000)
        assert book.initial_sample_size("MN", stats) == 6  # max(4, 3% of 200)

    def test_minnesota_small_jurisdiction_is_unspecified(self, book):
        with pytest.raises(PolicyError) as err:
            book.initial_sample_size("MN", ContestStats(precincts=20, registered_voters=5000))
        assert err.value.code == "UNSPECIFIED"


class TestEscalation:
    def test_alaska_one_percent_goes_to_full_count(self, book):
        state = EscalationState(round=0, discrepancy_fraction=F(1, 100))
        assert book.escalation_step("AK", state).kind == FULL_COUNT

    def test_minnesota_small_precinct_three_votes(self, book):
        state = EscalationState(round=0, small_precinct_vote_diff=3)
        action = book.escalation_step("MN", state)
        assert action.kind == ADD and action.add_units == 3

    def test_no_discrepancy_stops(self, book):
        state = EscalationState(round=0)
        for rule in ("AK", "CA", "HI", "OR", "TN", "WV", "MN", "NY"):
            assert book.escalation_step(rule, state).kind == STOP

    def test_hawaii_any_discrepancy_is_unspecified(self, book):
        state = EscalationState(round=0, discrepancy_fraction=F(1, 10000))
        assert book.escalation_step("HI", state).kind == UNSPECIFIED

    def test_minnesota_cross_county_flagged_unspecified(self, book):
        state = EscalationState(round=2, cross_county_vote_share=F(1, 5))
        assert book.escalation_step("MN", state).kind == UNSPECIFIED

    def test_new_york_percent_additions(self, book):
        stats = ContestStats(machines=200)
        state = EscalationState(round=0, vote_share_shift=F(1, 1000))
        action = book.escalation_step("NY", state, stats)
        assert action.kind == ADD and action.add_units == 10  # 5% of 200

    def test_ladders_terminate(self, book):
        """Every ladder reaches STOP/FULL_COUNT/UNSPECIFIED within
        rounds(ladder)+1 steps, whatever the metrics do."""
        hot = EscalationState(
            round=0, discrepancy_fraction=F(1), small_precinct_vote_diff=99,
            vote_share_shift=F(1), erroneous_machine_fraction=F(1),
            cross_county_vote_share=F(1), outcome_changed=True,
        )
        stats = ContestStats(precincts=100, machines=100)
        for rule_id, rule in book.rules.items():
            rounds = len(rule.get("ladder", []))
            for r in range(rounds + 2):
                action = book.escalation_step(rule_id, EscalationState(
                    round=r, discrepancy_fraction=hot.discrepancy_fraction,
                    small_precinct_vote_diff=hot.small_precinct_vote_diff,
                    vote_share_shift=hot.vote_share_shift,
                    erroneous_machine_fraction=hot.erroneous_machine_fraction,
                    cross_county_vote_share=hot.cross_county_vote_share,
                    outcome_changed=True,
                ), stats)
                if r >= rounds:
                    assert action.kind == STOP

    def test_unknown_rule(self, book):
        with pytest.raises(PolicyError) as err:
            book.escalation_step("ZZ", EscalationState())
        assert err.value.code == "UNKNOWN_RULE"


class TestModestProposal:
    def test_statewide_one_percent_margin(self):
        assert modest_proposal_probability(F(1), F(1, 100)) == F(3, 20)  # 0.15 exactly

    def test_local_race(self):
        assert modest_proposal_probability(F(1, 200), F(1, 20)) == F(81, 4000)  # 0.02025 exactly

    def test_tiny_margin_clamps_to_one(self):
        assert modest_proposal_probability(F(1), F(1, 100000)) == 1

    def test_zero_margin_rejected(self):
        with pytest.raises(PolicyError) as err:
            modest_proposal_probability(F(1), F(0))
        assert err.value.code == "ZERO_MARGIN"

    def test_decision_frequency_matches_probability(self):
        """The seeded lottery fires at the stated rate (within 4 sigma over
        20k seeds), independently of anything the audit observed — which is
        exactly why the full-count chance is the same under wrong outcomes."""
        p = modest_proposal_probability(F(1), F(1, 100))
        hits = sum(
            modest_proposal_decision(F(1), F(1, 100), SeedRecord(digits=str(i)), "race")[0]
            for i in range(20000)
        )
        expect = float(p) * 20000
        sigma = (20000 * float(p) * (1 - float(p))) ** 0.5
        assert abs(hits - expect) <= 4 * sigma

    def test_decision_deterministic_per_seed(self):
        seed = SeedRecord(digits="314159")
        a = modest_proposal_decision(F(1), F(1, 100), seed, "race-7")
        b = modest_proposal_decision(F(1), F(1, 100), seed, "race-7")
        assert a == b


class TestWpmDiagnostic:
    """The detection-paradigm calculator ships only as an optimistic-
    assumption diagnostic; its docstring says so and its numbers are
    visibly rosier than the rigorous planners for the same election."""

    def test_smaller_than_rigorous_plan_for_marin_a_shape(self):
        from rlakit.policy import wpm_detection_sample_size

        # Marin A shape: 16 batches, margin ~5.1% of ballots.  The rigorous
        # plan audited 12 of 16; the 20% WPM assumption claims 5 suffice.
        n = wpm_detection_sample_size(F(51, 1000), 16)
        assert 0 < n < 12

    def test_confidence_monotone(self):
        from rlakit.policy import wpm_detection_sample_size

        lo = wpm_detection_sample_size(F(1, 20), 100, confidence=F(3, 4))
        hi = wpm_detection_sample_size(F(1, 20), 100, confidence=F(99, 100))
        assert hi >= lo

    def test_zero_margin_rejected(self):
        from rlakit.policy import wpm_detection_sample_size

        with pytest.raises(PolicyError):
            wpm_detection_sample_size(F(0), 100)
