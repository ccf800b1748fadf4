"""Monte Carlo validation of the central guarantee.

Every method in rlakit.risk claims: if the apparent outcome is wrong,
the chance the audit certifies without a full count is at most the risk
limit.  This module attacks that claim directly.  Each adversarial
configuration fixes an election whose true tallies flip the outcome
(total overstatement at least the margin) with the error placed however
the adversary likes — concentrated in one batch, split across strata,
spread thin just over the allowance, hidden under taint thresholds —
and then runs the planned audit many times, counting how often it
certifies.  The observed certify rate must stay within binomial noise
of the risk limit.

Trials use a fast seeded RNG rather than the public-verifiability
stream: the property being measured is statistical, and the published
stream's uniformity is validated separately.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate

from . import risk
from .model import EXEMPT_STRATUM_MRO, STRATIFIED_WORST_CASE, TRINOMIAL_PPEB, ModelError


class SimulationError(ModelError):
    pass


@dataclass(frozen=True)
class WorstCaseConfig:
    """A wrong-outcome election audited by an SRS method (stratified or
    exempt-stratum).  `overstatements` are the adversary's true per-batch
    margin overstatements in votes for the sampleable batches."""

    name: str
    method: str
    strata: tuple[str, ...]
    bounds: tuple[Fraction, ...]
    overstatements: tuple[Fraction, ...]
    exempt_worst_case: Fraction
    exempt_actual: Fraction
    margin: Fraction
    allowance: int
    alpha: Fraction

    def __post_init__(self):
        if len(self.strata) != len(self.bounds) or len(self.bounds) != len(self.overstatements):
            raise SimulationError("BAD_CONFIG", "strata, bounds and overstatements must align")
        for e, u in zip(self.overstatements, self.bounds):
            if e > u:
                raise SimulationError("BAD_CONFIG", "an overstatement exceeds its batch bound")
        if self.exempt_actual > self.exempt_worst_case:
            raise SimulationError("BAD_CONFIG", "exempt error exceeds the exempt worst case")
        total = sum(self.overstatements, Fraction(0)) + self.exempt_actual
        if total < self.margin:
            raise SimulationError("NOT_WRONG_OUTCOME", f"total error {total} below margin {self.margin}")

    def plan_samples(self) -> dict[str, int]:
        labels = sorted(set(self.strata))
        if self.method == STRATIFIED_WORST_CASE:
            sizes = [(s, self.strata.count(s)) for s in labels]
            plan = risk.plan_stratified_worst_case(
                sizes, list(self.bounds), self.margin, self.exempt_worst_case, self.allowance, self.alpha
            )
            return plan.sample_sizes
        b_star = risk.min_bad_batches(list(self.bounds), self.margin, self.exempt_worst_case, self.allowance)
        if b_star is risk.INFEASIBLE:
            return {labels[0]: 0}
        population = len(self.bounds)
        for n in range(population + 1):
            if risk.srs_miss_probability(population, int(b_star), n) <= self.alpha:
                return {labels[0]: n}
        raise SimulationError("BAD_CONFIG", "unreachable")


@dataclass(frozen=True)
class TrinomialConfig:
    """A wrong-outcome election audited by the trinomial/PPEB method.
    Bounds and taints are in margin-relative units; sum(u*t) >= 1."""

    name: str
    bounds: tuple[Fraction, ...]
    taints: tuple[Fraction, ...]
    d: Fraction
    draws: int
    alpha: Fraction
    wrong_outcome: bool = True

    def __post_init__(self):
        if len(self.bounds) != len(self.taints):
            raise SimulationError("BAD_CONFIG", "bounds and taints must align")
        if any(t > 1 for t in self.taints):
            raise SimulationError("BAD_CONFIG", "taint cannot exceed 1")
        total_error = sum((u * t for u, t in zip(self.bounds, self.taints)), Fraction(0))
        if self.wrong_outcome and total_error < 1:
            raise SimulationError("NOT_WRONG_OUTCOME", f"total relative error {float(total_error):.3f} < 1")

    @property
    def total_bound(self) -> Fraction:
        return sum(self.bounds, Fraction(0))


@dataclass(frozen=True)
class SimulationResult:
    name: str
    method: str
    trials: int
    certified: int
    alpha: float

    @property
    def rate(self) -> float:
        return self.certified / self.trials

    @property
    def limit(self) -> float:
        """alpha plus three binomial sigmas at the limit itself."""
        sigma = (self.alpha * (1 - self.alpha) / self.trials) ** 0.5
        return self.alpha + 3 * sigma

    @property
    def passed(self) -> bool:
        return self.rate <= self.limit

    def row(self) -> str:
        flag = "ok " if self.passed else "FAIL"
        return (
            f"{flag} {self.method:<22} {self.name:<28} "
            f"rate={self.rate:.4f} limit={self.limit:.4f} ({self.certified}/{self.trials})"
        )


def simulate_worst_case(config: WorstCaseConfig, trials: int, seed: int = 1) -> SimulationResult:
    samples = config.plan_samples()
    labels = sorted(set(config.strata))
    by_stratum: dict[str, list[int]] = {s: [] for s in labels}
    for i, s in enumerate(config.strata):
        by_stratum[s].append(i)
    bad = frozenset(
        i for i, e in enumerate(config.overstatements) if e > config.allowance
    )
    rng = random.Random(seed)
    plan_list = [(by_stratum[s], samples.get(s, 0)) for s in labels]
    certified = 0
    for _ in range(trials):
        caught = False
        for pool, n in plan_list:
            if n == 0:
                continue
            for i in rng.sample(pool, n):
                if i in bad:
                    caught = True
                    break
            if caught:
                break
        if not caught:
            certified += 1
    return SimulationResult(config.name, config.method, trials, certified, float(config.alpha))


def simulate_trinomial(config: TrinomialConfig, trials: int, seed: int = 1) -> SimulationResult:
    n, d, alpha = config.draws, config.d, config.alpha
    region = risk.certify_region(n, d, config.total_bound, alpha)
    # category per batch: 0 (taint <= 0), 1 (below d), 2 (at or above d)
    cats = [0 if t <= 0 else (2 if t >= d else 1) for t in config.taints]
    cum_weights = list(accumulate(float(u) for u in config.bounds))
    rng = random.Random(seed)
    certified = 0
    for _ in range(trials):
        k1 = k2 = 0
        for c in rng.choices(cats, cum_weights=cum_weights, k=n):
            if c == 1:
                k1 += 1
            elif c == 2:
                k2 += 1
        if (k1, k2) in region:
            certified += 1
    return SimulationResult(config.name, TRINOMIAL_PPEB, trials, certified, float(alpha))


def simulate_risk(config, trials: int, seed: int = 1) -> SimulationResult:
    if isinstance(config, TrinomialConfig):
        return simulate_trinomial(config, trials, seed)
    return simulate_worst_case(config, trials, seed)


# ---------------------------------------------------------------------------
# The shipped adversarial suite: >= 10 wrong-outcome configurations per
# method, covering single-bad-batch and error-spread-thin placements.

_F = Fraction


def _marin_shape(name: str, overs: list[Fraction | int], exempt_actual: Fraction | int) -> WorstCaseConfig:
    """Two strata of 8 with the Marin Measure A bounds, margin 298,
    allowance 4, exempt worst case 194 2/3 votes."""
    strata = ("IP",) * 8 + ("VBM",) * 8
    bounds = (286, 214, _F(518, 3), 221, 171, 222, 181, 152,
              456, 268, 250, 319, 346, 403, 296, 257)
    return WorstCaseConfig(
        name=name, method=STRATIFIED_WORST_CASE, strata=strata,
        bounds=tuple(_F(b) for b in bounds),
        overstatements=tuple(_F(e) for e in overs),
        exempt_worst_case=_F(584, 3), exempt_actual=_F(exempt_actual),
        margin=_F(298), allowance=4, alpha=_F(1, 4),
    )


def stratified_suite() -> list[WorstCaseConfig]:
    z = [0] * 16
    A = _F(584, 3)  # adversary takes the full exempt worst case

    def overs(**kw) -> list:
        out = list(z)
        for idx, e in kw.items():
            out[int(idx[1:])] = e
        return out

    return [
        _marin_shape("single-bad-ip-largest", overs(i0=104), A),
        _marin_shape("single-bad-vbm-largest", overs(i8=104), A),
        _marin_shape("single-bad-smallest-bound", overs(i7=104), A),
        _marin_shape("two-bad-split-strata", overs(i0=52, i8=52), A),
        _marin_shape("two-bad-same-stratum", overs(i0=52, i1=52), A),
        _marin_shape("three-bad-one-stratum", overs(i0=35, i1=35, i2=35), A),
        _marin_shape("spread-thin-all-16", [7] * 16, A),
        _marin_shape("boundary-others-at-allowance", [4] * 15 + [44], A),
        _marin_shape("no-exempt-error-two-bad", overs(i0=286, i8=12), 0),
        _marin_shape("boundary-exact-margin", overs(i0=_F(310, 3)), A),
        WorstCaseConfig(
            name="uneven-strata-single-bad", method=STRATIFIED_WORST_CASE,
            strata=("A",) * 5 + ("B",) * 3,
            bounds=tuple(_F(200) for _ in range(8)),
            overstatements=tuple(_F(e) for e in [150, 0, 0, 0, 0, 0, 0, 0]),
            exempt_worst_case=_F(0), exempt_actual=_F(0),
            margin=_F(150), allowance=0, alpha=_F(1, 4),
        ),
        WorstCaseConfig(
            name="allowance-zero-spread", method=STRATIFIED_WORST_CASE,
            strata=("A",) * 6 + ("B",) * 6,
            bounds=tuple(_F(80) for _ in range(12)),
            overstatements=tuple(_F(20) for _ in range(12)),
            exempt_worst_case=_F(0), exempt_actual=_F(0),
            margin=_F(240), allowance=0, alpha=_F(1, 4),
        ),
    ]


def _exempt(name: str, bounds: list, overs: list, margin, allowance=0, exempt_wc=0, exempt_actual=0) -> WorstCaseConfig:
    return WorstCaseConfig(
        name=name, method=EXEMPT_STRATUM_MRO,
        strata=("S",) * len(bounds),
        bounds=tuple(_F(b) for b in bounds),
        overstatements=tuple(_F(e) for e in overs),
        exempt_worst_case=_F(exempt_wc), exempt_actual=_F(exempt_actual),
        margin=_F(margin), allowance=allowance, alpha=_F(1, 4),
    )


def exempt_suite() -> list[WorstCaseConfig]:
    ten_100 = [100] * 10
    uneven = [500, 400, 300, 200, 100, 90, 80, 70, 60, 50]
    return [
        _exempt("three-bad-concentrated", ten_100, [100, 100, 50] + [0] * 7, 250),
        _exempt("four-bad-even", ten_100, [63, 63, 63, 63] + [0] * 6, 250),
        _exempt("all-bad-spread-thin", ten_100, [25] * 10, 250),
        _exempt("exempt-charged-three-bad", ten_100, [80, 80, 80] + [0] * 7, 250,
                exempt_wc=10, exempt_actual=10),
        _exempt("allowance-hiding", ten_100, [72, 72, 72] + [5] * 7, 250, allowance=5),
        _exempt("one-bad-big-pop", [300] * 40, [300] + [0] * 39, 300),
        _exempt("two-bad-big-pop", [160] * 40, [150, 150] + [0] * 38, 300),
        _exempt("uneven-one-huge-one-small", uneven, [500, 0, 0, 0, 100, 0, 0, 0, 0, 0], 600),
        _exempt("bad-in-smallest-bounds", uneven, [0, 0, 0, 200, 100, 90, 80, 70, 60, 50], 600),
        _exempt("boundary-exact", uneven, [500, 100, 0, 0, 0, 0, 0, 0, 0, 0], 600),
        _exempt("yolo-shaped-23-bad", [1001] + [728] * 23 + [446] * 79,
                [5] + [728] * 23 + [5] * 79, 17179, allowance=5,
                exempt_wc=55, exempt_actual=55),
    ]


def trinomial_suite() -> list[TrinomialConfig]:
    def cfg(name, bounds, taints, d, draws) -> TrinomialConfig:
        return TrinomialConfig(
            name=name, bounds=tuple(_F(b) for b in bounds), taints=tuple(_F(t) for t in taints),
            d=_F(d), draws=draws, alpha=_F(1, 4),
        )

    u10 = [_F(1, 10)] * 100                      # U = 10
    u12 = [_F(3, 5)] * 20                        # U = 12
    u135 = [_F(27, 200)] * 100                   # U = 13.5
    return [
        cfg("ten-hot-batches", u10, [1] * 10 + [0] * 90, _F(38, 1000), 14),
        cfg("two-hot-u12", u12, [1, 1] + [0] * 18, _F(47, 1000), 19),
        cfg("spread-below-threshold", u12, [_F(84, 1000)] * 20, _F(1, 10), 19),
        cfg("negative-mixed", u12, [1, 1, 1, _F(-1, 2), _F(-1, 2)] + [0] * 15, _F(47, 1000), 19),
        cfg("santa-cruz-shape", u135, [1] * 8 + [0] * 92, _F(47, 1000), 19),
        cfg("single-hot-batch", [_F(6, 5)] + [_F(3, 20)] * 50, [1] + [0] * 50, _F(38, 1000), 14),
        cfg("hot-at-exactly-d", [_F(11, 20)] * 8 + [_F(1, 2)] * 10, [_F(1, 4)] * 8 + [0] * 10, _F(1, 4), 10),
        cfg("barely-wrong", [_F(1, 2)] * 2 + [_F(1, 2)] * 18, [1, 1] + [0] * 18, _F(47, 1000), 19),
        cfg("many-draws", [_F(1, 4)] * 32, [1, 1, 1, 1] + [0] * 28, _F(1, 50), 30),
        cfg("u-just-above-one", [_F(1, 2)] * 3, [1, 1, 0], _F(1, 10), 4),
        cfg("half-at-threshold", [_F(2, 5)] * 30, [_F(1, 5)] * 15 + [0] * 15, _F(1, 5), 16),
    ]


def adversarial_suite() -> list:
    return [*stratified_suite(), *exempt_suite(), *trinomial_suite()]


def run_suite(trials: int = 10**5, seed: int = 20080205) -> list[SimulationResult]:
    """Run every shipped adversarial configuration; each result carries
    its own pass/fail against alpha + 3 sigma."""
    results = []
    for i, config in enumerate(adversarial_suite()):
        results.append(simulate_risk(config, trials, seed + i))
    return results


def efficiency_report(trials: int = 10**4, seed: int = 7) -> SimulationResult:
    """Correct-outcome run: the certify rate here is an efficiency metric,
    not a risk bound (the risk limit binds only under wrong outcomes)."""
    config = TrinomialConfig(
        name="correct-outcome-efficiency",
        bounds=tuple(_F(1, 10) for _ in range(100)),
        taints=tuple(_F(0) for _ in range(100)),
        d=_F(38, 1000), draws=14, alpha=_F(1, 4),
        wrong_outcome=False,
    )
    return simulate_trinomial(config, trials, seed)
