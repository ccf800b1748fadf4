"""Exact rational arithmetic helpers shared across the engine.

All vote math stays in integers and `fractions.Fraction`; floats appear
only at the final display step.  Bounds round UP (a bound rounded down
would no longer be a bound); relative quantities display with
round-half-even at a caller-chosen number of decimals.
"""

from __future__ import annotations

import math
from fractions import Fraction


def frac_str(x: Fraction | int) -> str:
    """Encode a rational as 'p' or 'p/q' for JSON (no floats on the wire)."""
    f = Fraction(x)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def parse_frac(s: str | int) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    return Fraction(s.strip())


def ceil_votes(x: Fraction | int) -> int:
    """Round a vote-denominated bound up to a whole vote."""
    return math.ceil(Fraction(x))


def round_half_even(x: Fraction | int, decimals: int) -> Fraction:
    """Banker's rounding of an exact rational to `decimals` places, exactly."""
    scale = 10**decimals
    y = Fraction(x) * scale
    lower = math.floor(y)
    rem = y - lower
    if rem > Fraction(1, 2):
        n = lower + 1
    elif rem < Fraction(1, 2):
        n = lower
    else:
        n = lower if lower % 2 == 0 else lower + 1
    return Fraction(n, scale)


def decimal_str(x: Fraction | int, decimals: int) -> str:
    """Fixed-point rendering after round-half-even, e.g. -0.012 or 0.28."""
    r = round_half_even(x, decimals)
    scale = 10**decimals
    n = r.numerator * (scale // r.denominator)
    sign = "-" if n < 0 else ""
    n = abs(n)
    whole, frac = divmod(n, scale)
    if decimals == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{decimals}d}"
