"""Risk-limiting assessment methods: plan the sample, assess the counts.

Three methods, each with a planner (how much to audit) and an assessor
(stop, or count everything):

* Stratified worst case — vote-denominated bounds with a per-batch
  allowance `a`.  If the outcome were wrong, at least b* batches must
  hold an overstatement above `a`; the planner sizes per-stratum simple
  random samples so even the most adversarial placement of b* bad
  batches is missed with probability at most the risk limit.  All
  probabilities are exact rationals.

* Exempt-stratum MRO — the same logic with a single sampled stratum,
  after exempting small-bound batches and charging them their full
  worst case up front.

* Trinomial/PPEB — batches drawn with probability proportional to their
  relative bound u_p.  Each draw's taint falls in one of three buckets
  (<= 0, below d, at or above d).  If the outcome were wrong, the total
  relative error is at least 1, so the bucket distribution must satisfy
  d*p1 + p2 >= 1/U.  The p-value is the worst-case (supremum) chance,
  over that null set, of seeing bucket counts as clean as the ones
  observed, measured by the statistic S = d*K1 + K2.  The supremum sits
  on the constraint boundary because shifting probability mass into the
  higher buckets only makes clean observations rarer; it is evaluated
  on a fine p1 grid with exact tail sums plus a small slack for the
  grid spacing.

The worst-case-allocation and boundary-supremum shortcuts are justified
analytically above, but none of this is taken on faith: the Monte Carlo
validator in rlakit.simulate hammers every method with adversarial
wrong-outcome elections and checks the certification rate never exceeds
the risk limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb

from .exact import frac_str
from .model import ModelError


class RiskError(ModelError):
    pass


INFEASIBLE = math.inf  # sentinel: not enough possible error to flip the outcome


@dataclass(frozen=True)
class AllowanceRule:
    """Per-batch overstatements up to `a` votes are treated as noise;
    weight w_p(x) = (x-a)+ / b_p is zero exactly when a batch passes."""

    per_batch_votes: int

    def __post_init__(self):
        if self.per_batch_votes < 0:
            raise RiskError("BAD_ALLOWANCE", "allowance must be >= 0")

    def weight(self, overstatement: Fraction | int, ballots: int) -> Fraction:
        excess = Fraction(overstatement) - self.per_batch_votes
        if excess <= 0:
            return Fraction(0)
        return excess / ballots


CERTIFY = "CERTIFY"
ESCALATE_TO_FULL_COUNT = "ESCALATE_TO_FULL_COUNT"
EXPAND = "EXPAND"


@dataclass(frozen=True)
class Verdict:
    decision: str
    statistic: Fraction | None  # p-value or worst-case miss probability
    narrative: str

    def to_json(self) -> dict:
        return {
            "decision": self.decision,
            "statistic": frac_str(self.statistic) if self.statistic is not None else None,
            "statistic_float": float(self.statistic) if self.statistic is not None else None,
            "narrative": self.narrative,
        }


def min_bad_batches(
    bounds_votes: list[Fraction | int],
    margin: Fraction | int,
    unsampled_worst_case: Fraction | int = 0,
    allowance: int = 0,
) -> int | float:
    """Smallest number of sampleable batches that must hold overstatements
    above the allowance for the apparent outcome to be wrong.

    Error up to `allowance` votes may hide in every batch; exempt and
    unsampled batches are charged `unsampled_worst_case` in full.  If
    even every batch at its worst cannot reach the margin, the outcome
    cannot be wrong and the INFEASIBLE sentinel is returned.
    """
    if not bounds_votes:
        raise RiskError("EMPTY_POPULATION", "no sampleable batches")
    margin = Fraction(margin)
    slack = Fraction(unsampled_worst_case)
    ordered = sorted((Fraction(b) for b in bounds_votes), reverse=True)
    total = len(ordered)
    running = Fraction(0)
    if slack + allowance * total >= margin:
        return 0
    for b, bound in enumerate(ordered, start=1):
        running += bound
        if running + allowance * (total - b) + slack >= margin:
            return b
    return INFEASIBLE


def stratified_miss_probability(
    strata: list[tuple[int, int]], allocation: list[int]
) -> Fraction:
    """Chance a stratified SRS misses every bad batch: the product over
    strata of C(N_h - b_h, n_h) / C(N_h, n_h), exactly."""
    if len(strata) != len(allocation):
        raise RiskError("BAD_ALLOCATION", "allocation must give a count per stratum")
    prob = Fraction(1)
    for (size, sample), bad in zip(strata, allocation):
        if not (0 <= bad <= size) or not (0 <= sample <= size):
            raise RiskError("BAD_ALLOCATION", f"invalid stratum ({size},{sample}) with {bad} bad")
        if sample > size - bad:
            return Fraction(0)
        prob *= Fraction(comb(size - bad, sample), comb(size, sample))
    return prob


def srs_miss_probability(population: int, bad: int, sample: int) -> Fraction:
    return stratified_miss_probability([(population, sample)], [bad])


def worst_case_miss(sizes: list[int], samples: list[int], bad_total: int) -> Fraction:
    """Maximum miss probability over every way to place `bad_total` bad
    batches among the strata.  Exact enumeration up to 10^6 allocations;
    beyond that a greedy adversary places each bad batch where it buys
    the largest multiplicative increase in the miss probability.
    """
    k = len(sizes)
    if bad_total == 0:
        return Fraction(1)
    if sum(sizes) < bad_total:
        raise RiskError("BAD_ALLOCATION", "more bad batches than batches")
    n_alloc = comb(bad_total + k - 1, k - 1)
    if n_alloc <= 10**6:
        best = Fraction(0)
        for combo in combinations_with_replacement(range(k), bad_total):
            alloc = [0] * k
            ok = True
            for h in combo:
                alloc[h] += 1
                if alloc[h] > sizes[h]:
                    ok = False
                    break
            if not ok:
                continue
            p = stratified_miss_probability(list(zip(sizes, samples)), alloc)
            if p > best:
                best = p
        return best
    # Greedy adversary: adding a bad batch to stratum h multiplies the miss
    # probability by (N_h - b_h - n_h) / (N_h - b_h); pick the largest factor
    # each time (equivalently, favor the least-sampled stratum).
    alloc = [0] * k
    prob = stratified_miss_probability(list(zip(sizes, samples)), alloc)
    for _ in range(bad_total):
        factors = []
        for h in range(k):
            room = sizes[h] - alloc[h]
            if room <= 0:
                factors.append(Fraction(-1))
                continue
            num = sizes[h] - alloc[h] - samples[h]
            factors.append(Fraction(max(num, 0), room))
        h = max(range(k), key=lambda i: factors[i])
        if factors[h] < 0:
            raise RiskError("BAD_ALLOCATION", "nowhere to place a bad batch")
        alloc[h] += 1
        prob *= factors[h]
    return prob


@dataclass(frozen=True)
class StratifiedPlan:
    sample_sizes: dict[str, int]
    worst_case_risk: Fraction
    min_bad: int | float

    def to_json(self) -> dict:
        return {
            "sample_sizes": dict(sorted(self.sample_sizes.items())),
            "worst_case_risk": frac_str(self.worst_case_risk),
            "min_bad": self.min_bad if self.min_bad is not INFEASIBLE else "inf",
        }


def plan_stratified_worst_case(
    strata: list[tuple[str, int]],
    bounds_votes: list[Fraction | int],
    margin: Fraction | int,
    unsampled_worst_case: Fraction | int,
    allowance: int,
    alpha: Fraction,
) -> StratifiedPlan:
    """Smallest per-stratum sample sizes whose worst-case miss probability
    is at most alpha, grown by round-robin increments that always go to
    the stratum buying the biggest risk reduction."""
    labels = [s for s, _ in strata]
    sizes = [n for _, n in strata]
    b_star = min_bad_batches(bounds_votes, margin, unsampled_worst_case, allowance)
    if b_star is INFEASIBLE:
        return StratifiedPlan({s: 0 for s in labels}, Fraction(0), INFEASIBLE)
    if b_star == 0:
        # Even spotless counts cannot rule out a wrong outcome at this
        # allowance: every plan fails, a full count is the only audit.
        raise RiskError("INFEASIBLE", "allowance alone could conceal an outcome-changing error")
    samples = [0] * len(sizes)
    risk = worst_case_miss(sizes, samples, b_star)
    while risk > alpha:
        best_h, best_risk = None, None
        for h in range(len(sizes)):
            if samples[h] >= sizes[h]:
                continue
            trial = samples.copy()
            trial[h] += 1
            r = worst_case_miss(sizes, trial, b_star)
            if best_risk is None or r < best_risk:
                best_h, best_risk = h, r
        if best_h is None:
            break  # everything fully sampled: risk is 0
        samples[best_h] += 1
        risk = best_risk
    return StratifiedPlan(dict(zip(labels, samples)), risk, b_star)


@dataclass(frozen=True)
class ExemptPlan:
    exempt_ids: tuple[str, ...]
    exempt_worst_case: Fraction
    min_bad: int | float
    sample_size: int
    worst_case_risk: Fraction

    def to_json(self) -> dict:
        return {
            "exempt_ids": list(self.exempt_ids),
            "exempt_worst_case": frac_str(self.exempt_worst_case),
            "min_bad": self.min_bad if self.min_bad is not INFEASIBLE else "inf",
            "sample_size": self.sample_size,
            "worst_case_risk": frac_str(self.worst_case_risk),
        }


def plan_exempt_stratum(
    bounds_votes: dict[str, Fraction | int],
    margin: Fraction | int,
    alpha: Fraction,
    exempt_threshold_votes: int,
    allowance: int = 0,
) -> ExemptPlan:
    """Exempt every batch whose worst case is at most the threshold,
    charge them that worst case, and size a single SRS over the rest."""
    if exempt_threshold_votes < 0:
        raise RiskError("BAD_THRESHOLD", "exempt threshold must be >= 0")
    exempt = tuple(sorted(bid for bid, b in bounds_votes.items() if Fraction(b) <= exempt_threshold_votes))
    slack = sum((Fraction(bounds_votes[b]) for b in exempt), Fraction(0))
    if slack >= Fraction(margin):
        raise RiskError("INFEASIBLE_EXEMPTION", "exempt batches alone could conceal an outcome-changing error")
    sampleable = [Fraction(b) for bid, b in bounds_votes.items() if bid not in set(exempt)]
    b_star = min_bad_batches(sampleable, margin, slack, allowance)
    if b_star is INFEASIBLE:
        return ExemptPlan(exempt, slack, INFEASIBLE, 0, Fraction(0))
    if b_star == 0:
        raise RiskError("INFEASIBLE", "allowance alone could conceal an outcome-changing error")
    population = len(sampleable)
    for n in range(population + 1):
        risk = srs_miss_probability(population, int(b_star), n)
        if risk <= alpha:
            return ExemptPlan(exempt, slack, b_star, n, risk)
    raise RiskError("INFEASIBLE", "unreachable: a full sample has zero miss probability")


def assess_worst_case(
    overstatements_votes: dict[str, Fraction],
    allowance: AllowanceRule,
    planned_risk: Fraction,
    alpha: Fraction,
    bound_exceeded: bool = False,
) -> Verdict:
    """Certify iff every sampled batch's margin overstatement fits inside
    the allowance (weight zero for all), at the planned worst-case risk."""
    a = allowance.per_batch_votes
    offenders = sorted(bid for bid, e in overstatements_votes.items() if e > a)
    if bound_exceeded:
        return Verdict(
            ESCALATE_TO_FULL_COUNT, None,
            "a hand count exceeded its batch's worst-case bound; the audit must go to a full count",
        )
    if offenders:
        return Verdict(
            ESCALATE_TO_FULL_COUNT, planned_risk,
            f"overstatement above the {a}-vote allowance in: {', '.join(offenders)}",
        )
    if planned_risk > alpha:
        return Verdict(
            EXPAND, planned_risk,
            "no disqualifying discrepancies, but the planned sample cannot attain the risk limit",
        )
    return Verdict(
        CERTIFY, planned_risk,
        f"every sampled batch within the {a}-vote allowance; worst-case miss probability "
        f"{frac_str(planned_risk)} <= risk limit {frac_str(alpha)}",
    )


# ---------------------------------------------------------------------------
# Trinomial bound for PPEB samples


@dataclass(frozen=True)
class TrinomialOutcome:
    k0: int  # draws with taint <= 0
    k1: int  # draws with 0 < taint < d
    k2: int  # draws with taint >= d
    d: Fraction
    total_bound: Fraction  # U = sum of u_p over every batch in the contest

    def __post_init__(self):
        if min(self.k0, self.k1, self.k2) < 0:
            raise RiskError("BAD_COUNTS", "category counts cannot be negative")
        if not (0 < self.d < 1):
            raise RiskError("BAD_THRESHOLD", "d must be in (0,1)")

    @property
    def n(self) -> int:
        return self.k0 + self.k1 + self.k2


def classify_taints(taints: list[Fraction], d: Fraction, total_bound: Fraction) -> TrinomialOutcome:
    k0 = sum(1 for t in taints if t <= 0)
    k2 = sum(1 for t in taints if t >= d)
    k1 = len(taints) - k0 - k2
    return TrinomialOutcome(k0, k1, k2, d, total_bound)


def _tail_pairs(n: int, d: Fraction, s_obs: Fraction) -> list[tuple[int, int, int]]:
    """All (k1, k2) with d*k1 + k2 <= s_obs, paired with their multinomial
    coefficient.  Exact comparisons: d and s_obs are rationals."""
    pairs = []
    j2_max = min(n, int(s_obs)) if s_obs >= 0 else -1
    for j2 in range(j2_max + 1):
        j1_cap = (s_obs - j2) / d
        j1_max = min(n - j2, int(j1_cap))
        for j1 in range(j1_max + 1):
            pairs.append((j1, j2, comb(n, j1) * comb(n - j1, j2)))
    return pairs


def trinomial_pvalue(outcome: TrinomialOutcome) -> Fraction:
    """Worst-case chance, under any wrong-outcome bucket distribution, of
    bucket counts as clean as those observed.

    The null set is {d*p1 + p2 >= 1/U}; the supremum of
    Pr[d*K1 + K2 <= d*k1 + k2] over it lies on the boundary
    d*p1 + p2 = 1/U.  The boundary is scanned on a p1 grid of step 1e-4
    (the argmax located in floating point, then re-evaluated with exact
    rational tail sums) and 1e-6 is added for grid slack.
    """
    n, d, U = outcome.n, outcome.d, outcome.total_bound
    if U <= 1:
        raise RiskError("U_NOT_ABOVE_ONE", "total bound U must exceed 1 (otherwise the outcome cannot be wrong)")
    if n == 0:
        return Fraction(1)
    c = 1 / U
    s_obs = d * outcome.k1 + outcome.k2
    pairs = _tail_pairs(n, d, s_obs)

    p1_cap = min(c / d, (1 - c) / (1 - d))
    grid = 10**4
    i_max = int(p1_cap * grid)

    cf, df = float(c), float(d)

    def tail_float(p1: float) -> float:
        p2 = cf - df * p1
        p0 = 1.0 - p1 - p2
        if p0 < 0 or p2 < 0:
            return -1.0
        return sum(m * p0 ** (n - j1 - j2) * p1**j1 * p2**j2 for j1, j2, m in pairs)

    best_i = max(range(i_max + 1), key=lambda i: tail_float(i / grid))

    def tail_exact(p1: Fraction) -> Fraction:
        p2 = c - d * p1
        p0 = 1 - p1 - p2
        if p0 < 0 or p2 < 0:
            return Fraction(0)
        return sum(
            (m * p0 ** (n - j1 - j2) * p1**j1 * p2**j2 for j1, j2, m in pairs),
            Fraction(0),
        )

    best = max(tail_exact(Fraction(best_i, grid)), tail_exact(p1_cap))
    return min(Fraction(1), best + Fraction(1, 10**6))


def assess_trinomial(outcome: TrinomialOutcome, alpha: Fraction, bound_exceeded: bool = False) -> Verdict:
    if bound_exceeded:
        return Verdict(
            ESCALATE_TO_FULL_COUNT, None,
            "a hand count exceeded its batch's worst-case bound; the audit must go to a full count",
        )
    p = trinomial_pvalue(outcome)
    counts = f"({outcome.k0},{outcome.k1},{outcome.k2})"
    if p <= alpha:
        return Verdict(
            CERTIFY, p,
            f"taint categories {counts} over {outcome.n} draws give p-value "
            f"{float(p):.4f} <= risk limit {frac_str(alpha)}",
        )
    return Verdict(
        ESCALATE_TO_FULL_COUNT, p,
        f"taint categories {counts} over {outcome.n} draws give p-value "
        f"{float(p):.4f} > risk limit {frac_str(alpha)}",
    )


def certify_region(n: int, d: Fraction, total_bound: Fraction, alpha: Fraction) -> set[tuple[int, int]]:
    """All (k1, k2) bucket counts that certify at this n, d, U and alpha.

    The p-value is nondecreasing in k1 and k2, so each k2 row stops at
    the first k1 that fails.
    """
    region: set[tuple[int, int]] = set()
    for k2 in range(n + 1):
        any_row = False
        for k1 in range(n - k2 + 1):
            outcome = TrinomialOutcome(n - k1 - k2, k1, k2, d, total_bound)
            if trinomial_pvalue(outcome) <= alpha:
                region.add((k1, k2))
                any_row = True
            else:
                break
        if not any_row:
            break
    return region


def plan_trinomial(
    rate_small: Fraction,
    rate_large: Fraction,
    d: Fraction,
    total_bound: Fraction,
    alpha: Fraction,
    max_draws: int = 1000,
) -> int:
    """Smallest number of PPEB draws that certifies if taint buckets come
    in at the expected rates (counts rounded up, conservatively).

    The choice only moves workload; the risk limit holds for any (n, d).
    """
    if total_bound <= 1:
        raise RiskError("U_NOT_ABOVE_ONE", "total bound U must exceed 1")
    if not (0 <= rate_small <= 1 and 0 <= rate_large <= 1):
        raise RiskError("BAD_RATES", "rates must be in [0,1]")
    if d * rate_small + rate_large >= 1 / total_bound:
        raise RiskError(
            "NO_FEASIBLE_N",
            "expected taint rates are indistinguishable from a wrong outcome; recommend a full count",
        )
    for n in range(1, max_draws + 1):
        k1 = math.ceil(rate_small * n)
        k2 = math.ceil(rate_large * n)
        if k1 + k2 > n:
            continue
        outcome = TrinomialOutcome(n - k1 - k2, k1, k2, d, total_bound)
        if trinomial_pvalue(outcome) <= alpha:
            return n
    raise RiskError("NO_FEASIBLE_N", f"no draw count up to {max_draws} certifies at these rates")
