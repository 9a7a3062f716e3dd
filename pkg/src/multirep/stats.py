"""Small numeric helpers shared across modules: exact rational thresholds,
log-space accumulation, and Wilson score intervals."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable


def frac(x) -> Fraction:
    """Exact Fraction view of a parameter.

    Floats convert to their exact binary value, so dyadic inputs (1/2, 3/4,
    31/32, ...) stay exact and threshold comparisons never suffer float
    rounding.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def quota(coefficient, count: int) -> int:
    """ceil(coefficient * count) computed exactly."""
    return ceil_frac(frac(coefficient) * count)


def logsumexp(values: Iterable[float]) -> float:
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    hi = max(vals)
    return hi + math.log(sum(math.exp(v - hi) for v in vals))


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson 95% score interval for a binomial proportion.

    Stays informative at 0 or n successes, which is where the fault-injection
    sweeps live most of the time.
    """
    if trials <= 0:
        raise ValueError("trials >= 1 required")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)
