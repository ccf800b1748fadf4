"""Planners and assessors: exact combinatorics, the trinomial bound, and
their published or derived reference values."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlakit import risk
from rlakit.risk import (
    INFEASIBLE,
    AllowanceRule,
    RiskError,
    TrinomialOutcome,
    assess_trinomial,
    assess_worst_case,
    certify_region,
    min_bad_batches,
    plan_exempt_stratum,
    plan_stratified_worst_case,
    plan_trinomial,
    srs_miss_probability,
    stratified_miss_probability,
    trinomial_pvalue,
    worst_case_miss,
)

MARIN_A_SAMPLEABLE = [286, 456, 214, 268, 173, 250, 221, 319, 171, 346, 222, 403, 181, 296, 152, 257]
MARIN_A_EXEMPT = F(584, 3)  # provisional worst case 190 2/3 plus the 4-vote tiny batch


class TestMinBadBatches:
    def test_marin_a_is_one(self):
        assert min_bad_batches(MARIN_A_SAMPLEABLE, 298, MARIN_A_EXEMPT, 4) == 1

    def test_single_batch_at_margin(self):
        assert min_bad_batches([100, 100, 100], 100, 0, 0) == 1

    def test_infeasible_sentinel(self):
        assert min_bad_batches([10, 10, 10], 100, 0, 0) is INFEASIBLE

    def test_empty_population(self):
        with pytest.raises(RiskError):
            min_bad_batches([], 100)


class TestStratifiedMissProbability:
    def test_published_quarter(self):
        assert stratified_miss_probability([(8, 6)], [1]) == F(1, 4)

    def test_nothing_to_find(self):
        assert stratified_miss_probability([(8, 6), (9, 3)], [0, 0]) == 1

    def test_exhaustive_sample_finds_everything(self):
        assert stratified_miss_probability([(8, 8)], [1]) == 0

    def test_product_over_strata(self):
        assert stratified_miss_probability([(8, 6), (8, 6)], [1, 1]) == F(1, 16)

    def test_bad_allocation(self):
        with pytest.raises(RiskError):
            stratified_miss_probability([(8, 6)], [9])

    @given(
        st.integers(min_value=2, max_value=12),
        st.integers(min_value=0, max_value=6),
        st.integers(min_value=0, max_value=6),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_sample_and_bad(self, size, sample, bad):
        sample = min(sample, size)
        bad = min(bad, size)
        p = stratified_miss_probability([(size, sample)], [bad])
        if sample < size:
            assert stratified_miss_probability([(size, sample + 1)], [bad]) <= p
        if bad < size:
            assert stratified_miss_probability([(size, sample)], [bad + 1]) <= p


class TestPlanStratified:
    def test_marin_a_plan_six_six_quarter(self):
        plan = plan_stratified_worst_case(
            [("IP", 8), ("VBM", 8)], MARIN_A_SAMPLEABLE, 298, MARIN_A_EXEMPT, 4, F(1, 4)
        )
        assert plan.sample_sizes == {"IP": 6, "VBM": 6}
        assert plan.worst_case_risk == F(1, 4)
        assert plan.min_bad == 1

    def test_vacuous_risk_limit_needs_no_sample(self):
        plan = plan_stratified_worst_case([("A", 8), ("B", 8)], [500] * 16, 298, 0, 4, F(1))
        assert plan.sample_sizes == {"A": 0, "B": 0}

    def test_minimality_decrement_violates_alpha(self):
        plan = plan_stratified_worst_case(
            [("IP", 8), ("VBM", 8)], MARIN_A_SAMPLEABLE, 298, MARIN_A_EXEMPT, 4, F(1, 4)
        )
        for label in plan.sample_sizes:
            sizes = dict(plan.sample_sizes)
            sizes[label] -= 1
            risk_after = worst_case_miss([8, 8], [sizes["IP"], sizes["VBM"]], int(plan.min_bad))
            assert risk_after > F(1, 4)

    def test_greedy_adversary_matches_enumeration(self):
        # small enough to enumerate: check the greedy path gives the same max
        sizes, samples, bad = [6, 9, 4], [2, 3, 1], 3
        exact = worst_case_miss(sizes, samples, bad)
        alloc_best = max(
            (
                stratified_miss_probability(list(zip(sizes, samples)), [i, j, bad - i - j])
                for i in range(bad + 1)
                for j in range(bad - i + 1)
            ),
        )
        assert exact == alloc_best


class TestAssessWorstCase:
    def test_marin_a_shape_certifies(self):
        e = {f"b{i}": F(x) for i, x in enumerate([0, 1, -2, 4, 3, 0])}
        v = assess_worst_case(e, AllowanceRule(4), F(1, 4), F(1, 4))
        assert v.decision == risk.CERTIFY
        assert v.statistic == F(1, 4)

    def test_one_vote_over_allowance_escalates(self):
        v = assess_worst_case({"b": F(5)}, AllowanceRule(4), F(1, 4), F(1, 4))
        assert v.decision == risk.ESCALATE_TO_FULL_COUNT

    def test_yolo_one_over_one_under_certifies(self):
        v = assess_worst_case({"a": F(1), "b": F(-1)}, AllowanceRule(5), F(1, 5), F(1, 4))
        assert v.decision == risk.CERTIFY

    def test_bound_exceeded_forces_full_count(self):
        v = assess_worst_case({"a": F(0)}, AllowanceRule(4), F(1, 4), F(1, 4), bound_exceeded=True)
        assert v.decision == risk.ESCALATE_TO_FULL_COUNT


class TestPlanExempt:
    def test_yolo_shape(self, yolo_w):
        from rlakit.bounds import all_bounds

        bounds = {bid: b.bound_votes for bid, b in all_bounds(yolo_w).items()}
        plan = plan_exempt_stratum(bounds, 17179, F(1, 4), 5, allowance=5)
        assert len(plan.exempt_ids) == 11
        assert plan.exempt_worst_case == 55
        assert plan.min_bad == 23
        assert plan.sample_size == 6

    def test_zero_threshold_exempts_nothing(self):
        plan = plan_exempt_stratum({"a": 100, "b": 100, "c": 100}, 150, F(1, 4), 0)
        assert plan.exempt_ids == ()
        assert plan.exempt_worst_case == 0

    def test_derived_synthetic(self):
        bounds = {f"b{i}": 100 for i in range(10)}
        plan = plan_exempt_stratum(bounds, 250, F(1, 4), 0)
        assert plan.min_bad == 3
        assert plan.sample_size == 4
        assert plan.worst_case_risk == F(35, 210)

    def test_103_and_23_needs_six(self):
        assert srs_miss_probability(103, 23, 5) > F(1, 4)
        assert srs_miss_probability(103, 23, 6) <= F(1, 4)

    def test_exemption_swallowing_margin_is_infeasible(self):
        with pytest.raises(RiskError) as err:
            plan_exempt_stratum({"a": 100, "b": 100}, 90, F(1, 4), 100)
        assert err.value.code == "INFEASIBLE_EXEMPTION"


class TestTrinomial:
    def test_worst_evidence_never_certifies(self):
        out = TrinomialOutcome(0, 0, 14, F(1, 100), F(10))
        p = trinomial_pvalue(out)
        assert p >= F(3, 4)
        assert assess_trinomial(out, F(1, 4)).decision == risk.ESCALATE_TO_FULL_COUNT

    def test_all_cat1_never_certifies(self):
        out = TrinomialOutcome(0, 19, 0, F(47, 1000), F(10))
        assert trinomial_pvalue(out) > F(1, 4)
        # when d >= 1/U the boundary reaches p2 = 0 and the p-value is 1
        out2 = TrinomialOutcome(0, 19, 0, F(1, 10), F(12))
        assert trinomial_pvalue(out2) == 1

    def test_marin_b_shape_zero_errors(self):
        out = TrinomialOutcome(14, 0, 0, F(1, 100), F(10))
        p = trinomial_pvalue(out)
        # sup sits at p1=0: (1 - 1/10)^14, plus the 1e-6 grid slack
        assert p == F(9, 10) ** 14 + F(1, 10**6)
        assert p <= F(1, 4)

    def test_santa_cruz_shape_certifies(self):
        out = TrinomialOutcome(17, 2, 0, F(47, 1000), F(28794, 2139))
        v = assess_trinomial(out, F(1, 4))
        assert v.decision == risk.CERTIFY
        assert v.statistic <= F(1, 4)

    def test_santa_cruz_decision_stable_over_plausible_U(self):
        """U was never published; the verdict holds for any total bound
        from the sampled-batch floor up through 14."""
        for u_float in [3.65, 5.0, 8.0, 10.0, 12.0, 13.46, 14.0]:
            out = TrinomialOutcome(17, 2, 0, F(47, 1000), F(int(u_float * 100), 100))
            assert trinomial_pvalue(out) <= F(1, 4), u_float

    def test_u_not_above_one(self):
        with pytest.raises(RiskError) as err:
            trinomial_pvalue(TrinomialOutcome(5, 0, 0, F(1, 10), F(1)))
        assert err.value.code == "U_NOT_ABOVE_ONE"

    def test_pvalue_monotone_in_k1_k2_and_U(self):
        n, d = 12, F(5, 100)
        base = trinomial_pvalue(TrinomialOutcome(12, 0, 0, d, F(8)))
        assert trinomial_pvalue(TrinomialOutcome(11, 1, 0, d, F(8))) >= base
        assert trinomial_pvalue(TrinomialOutcome(11, 0, 1, d, F(8))) >= base
        assert trinomial_pvalue(TrinomialOutcome(11, 0, 1, d, F(8))) >= trinomial_pvalue(
            TrinomialOutcome(11, 1, 0, d, F(8))
        )
        # larger U weakens the evidence: p never decreases
        assert trinomial_pvalue(TrinomialOutcome(12, 0, 0, d, F(12))) >= base

    def test_certify_region_respects_monotonicity(self):
        region = certify_region(19, F(47, 1000), F(28794, 2139), F(1, 4))
        assert (2, 0) in region
        assert (0, 0) in region
        for (k1, k2) in region:
            if k1 > 0:
                assert (k1 - 1, k2) in region


class TestPlanTrinomial:
    def test_zero_rates_u10(self):
        assert plan_trinomial(F(0), F(0), F(1, 100), F(10), F(1, 4)) == 14

    def test_vacuous_alpha_needs_one_draw(self):
        assert plan_trinomial(F(0), F(0), F(1, 10), F(10), F(999999, 1000000)) == 1

    def test_pessimistic_rates_infeasible(self):
        with pytest.raises(RiskError) as err:
            plan_trinomial(F(0), F(1, 5), F(1, 10), F(10), F(1, 4))
        assert err.value.code == "NO_FEASIBLE_N"

    def test_small_rates_grow_n(self):
        lean = plan_trinomial(F(0), F(0), F(38, 1000), F(10), F(1, 4))
        noisy = plan_trinomial(F(1, 20), F(0), F(38, 1000), F(10), F(1, 4))
        assert noisy >= lean


def test_allowance_weight_function():
    rule = AllowanceRule(4)
    assert rule.weight(4, 391) == 0
    assert rule.weight(0, 391) == 0
    assert rule.weight(-3, 391) == 0
    assert rule.weight(6, 391) == F(2, 391)
    with pytest.raises(RiskError):
        AllowanceRule(-1)


class TestPlanMinimality:
    def test_exempt_plan_decrement_violates_alpha(self, yolo_w):
        from rlakit.bounds import all_bounds

        bounds = {bid: b.bound_votes for bid, b in all_bounds(yolo_w).items()}
        plan = plan_exempt_stratum(bounds, 17179, F(1, 4), 5, allowance=5)
        assert plan.sample_size == 6
        assert srs_miss_probability(103, int(plan.min_bad), plan.sample_size - 1) > F(1, 4)

    def test_trinomial_plan_decrement_violates_alpha(self):
        n = plan_trinomial(F(0), F(0), F(38, 1000), F(10), F(1, 4))
        p_at_less = trinomial_pvalue(TrinomialOutcome(n - 1, 0, 0, F(38, 1000), F(10)))
        assert p_at_less > F(1, 4)

    def test_synthetic_exempt_decrement(self):
        plan = plan_exempt_stratum({f"b{i}": 100 for i in range(10)}, 250, F(1, 4), 0)
        assert srs_miss_probability(10, int(plan.min_bad), plan.sample_size - 1) > F(1, 4)
