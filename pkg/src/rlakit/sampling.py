"""Seed-deterministic, publicly verifiable random selection.

A dice-rolled decimal seed is committed before any draw.  The stream is
SHA-256 in counter mode over "seed:counter" (or "seed:namespace:counter"
for per-stratum substreams): anyone can recompute every draw from the
published seed with a few lines of code, on any platform, which is the
point — the selection must be beyond suspicion of cherry-picking.

Uniform integers come from the top 8 digest bytes (big-endian) with
rejection sampling, so there is no modulo bias.  Simple random samples
use sequential selection-sampling over the population in sorted-id
order; PPEB walks exact cumulative rational thresholds, so a tie in
floating point can never flip a selection.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .model import ModelError


class SamplingError(ModelError):
    pass


@dataclass(frozen=True)
class SeedRecord:
    """Dice-rolled decimal seed with its commitment attestation."""

    digits: str
    committed_at: str = ""
    committed_after_results: bool = True

    def __post_init__(self):
        if not self.digits or not self.digits.isdigit():
            raise SamplingError("BAD_SEED", "seed must be a non-empty decimal string")

    def to_json(self) -> dict:
        return {
            "digits": self.digits,
            "committed_at": self.committed_at,
            "committed_after_results": self.committed_after_results,
        }

    @staticmethod
    def from_json(obj: dict) -> "SeedRecord":
        return SeedRecord(
            digits=obj["digits"],
            committed_at=obj.get("committed_at", ""),
            committed_after_results=bool(obj.get("committed_after_results", True)),
        )


class Stream:
    """Deterministic uniform-integer stream for one (seed, namespace)."""

    _WIDTH = 8  # digest prefix bytes -> 64-bit values

    def __init__(self, seed: SeedRecord, namespace: str = ""):
        self.seed = seed
        self.namespace = namespace
        self.counter = 0

    def _next_word(self) -> int:
        if self.namespace:
            msg = f"{self.seed.digits}:{self.namespace}:{self.counter}"
        else:
            msg = f"{self.seed.digits}:{self.counter}"
        self.counter += 1
        digest = hashlib.sha256(msg.encode("ascii")).digest()
        return int.from_bytes(digest[: self._WIDTH], "big")

    def uniform(self, n: int) -> int:
        """Uniform integer in [0, n) — rejection sampling, no modulo bias."""
        if n <= 0:
            raise SamplingError("RANGE_ZERO", "range must be positive")
        span = 1 << (8 * self._WIDTH)
        limit = (span // n) * n
        while True:
            v = self._next_word()
            if v < limit:
                return v % n


def prng_stream(seed: SeedRecord, namespace: str = "") -> Stream:
    if not seed.committed_after_results:
        raise SamplingError("SEED_NOT_ATTESTED", "seed must be committed after subtotals are reported")
    return Stream(seed, namespace)


SRS = "SRS"
STRATIFIED = "STRATIFIED"
PPEB = "PPEB"


@dataclass(frozen=True)
class DrawRecord:
    draw: int
    value: int
    batch_id: str

    def to_json(self) -> dict:
        return {"draw": self.draw, "value": self.value, "batch": self.batch_id}


@dataclass(frozen=True)
class DrawResult:
    method: str
    selections: tuple[str, ...]  # PPEB may repeat; SRS/STRATIFIED are distinct
    trail: tuple[DrawRecord, ...] = field(default_factory=tuple)

    def distinct(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.selections:
            seen.setdefault(s)
        return list(seen)

    def multiplicity(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.selections:
            out[s] = out.get(s, 0) + 1
        return out

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "selections": list(self.selections),
            "trail": [t.to_json() for t in self.trail],
        }

    @staticmethod
    def from_json(obj: dict) -> "DrawResult":
        return DrawResult(
            method=obj["method"],
            selections=tuple(obj["selections"]),
            trail=tuple(DrawRecord(t["draw"], t["value"], t["batch"]) for t in obj.get("trail", ())),
        )


def draw_srs(population: list[str], n: int, seed: SeedRecord, namespace: str = "") -> DrawResult:
    """Simple random sample of n distinct ids, every size-n subset equally
    likely.  The population is walked in sorted order so the same seed
    yields the same subset regardless of input row order."""
    ids = sorted(population)
    count = len(ids)
    if n > count:
        raise SamplingError("N_TOO_LARGE", f"cannot draw {n} from {count}")
    stream = prng_stream(seed, namespace)
    chosen: list[str] = []
    trail: list[DrawRecord] = []
    remaining = n
    for i, bid in enumerate(ids):
        if remaining == 0:
            break
        left = count - i
        v = stream.uniform(left)
        if v < remaining:
            trail.append(DrawRecord(len(chosen), v, bid))
            chosen.append(bid)
            remaining -= 1
    return DrawResult(SRS, tuple(chosen), tuple(trail))


def draw_stratified(strata: dict[str, list[str]], sizes: dict[str, int], seed: SeedRecord) -> DrawResult:
    """Independent SRS per stratum, each on its own substream, so adding,
    removing or reordering strata leaves the others' selections alone."""
    selections: list[str] = []
    trail: list[DrawRecord] = []
    for label in sorted(sizes):
        if label not in strata:
            raise SamplingError("UNKNOWN_STRATUM", label)
        part = draw_srs(strata[label], sizes[label], seed, namespace=f"stratum:{label}")
        base = len(selections)
        selections.extend(part.selections)
        trail.extend(DrawRecord(base + t.draw, t.value, t.batch_id) for t in part.trail)
    return DrawResult(STRATIFIED, tuple(selections), tuple(trail))


def draw_ppeb(bounds: list[tuple[str, Fraction]], n: int, seed: SeedRecord) -> DrawResult:
    """n draws with replacement, each selecting batch p with probability
    u_p / U.  Selection walks exact integer cumulative weights."""
    if n < 1:
        raise SamplingError("RANGE_ZERO", "need at least one draw")
    items = sorted(bounds)
    weights = [Fraction(u) for _, u in items]
    if any(u < 0 for u in weights):
        raise SamplingError("NEGATIVE_BOUND", "error bounds cannot be negative")
    denom = lcm(*(u.denominator for u in weights)) if weights else 1
    ints = [u.numerator * (denom // u.denominator) for u in weights]
    total = sum(ints)
    if total == 0:
        raise SamplingError("ALL_ZERO_BOUNDS", "no batch has a positive error bound")
    stream = prng_stream(seed, namespace="ppeb")
    selections: list[str] = []
    trail: list[DrawRecord] = []
    for i in range(n):
        r = stream.uniform(total)
        acc = 0
        for (bid, _), w in zip(items, ints):
            acc += w
            if r < acc:
                selections.append(bid)
                trail.append(DrawRecord(i, r, bid))
                break
    return DrawResult(PPEB, tuple(selections), tuple(trail))


def expected_work(
    bounds: list[tuple[str, Fraction]], ballots: dict[str, int], n: int
) -> tuple[Fraction, Fraction]:
    """Expected number of distinct batches and expected ballots touched in
    n PPEB draws: sum_p (1-(1-u_p/U)^n) and sum_p b_p*(1-(1-u_p/U)^n)."""
    weights = [(bid, Fraction(u)) for bid, u in bounds]
    total = sum((u for _, u in weights), Fraction(0))
    if total == 0:
        raise SamplingError("ALL_ZERO_BOUNDS", "no batch has a positive error bound")
    distinct = Fraction(0)
    touched = Fraction(0)
    for bid, u in weights:
        hit = 1 - (1 - u / total) ** n
        distinct += hit
        touched += ballots[bid] * hit
    return distinct, touched


def draw_to_csv(result: DrawResult) -> str:
    lines = ["draw,value,batch"]
    for t in result.trail:
        lines.append(f"{t.draw},{t.value},{t.batch_id}")
    return "\n".join(lines) + "\n"
