"""Closed-form quantities for the three representations: firing thresholds,
the recognition approximation parameter, per-level recognition failure bounds
(delta), the Chernoff lower tail they are built from, and the binomial-tail
ratio behind the low-connectivity learning audit.

Every delta is reported twice: the exact formula, and a "paper-style" variant
that simplifies the tree-size coefficients (k^(l+1)-1)/(k-1) -> k^l and
(k^l-1)/(k-1) -> k^(l-1), which is how the worked examples in the source
analysis round.  Everything is evaluated in log space first so exponents up to
1e4 keep their information even when the float value underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .stats import ceil_frac, frac, logsumexp

_LOG_FLOAT_MIN = -745.0  # below this exp() underflows to 0.0


class UnsatisfiableConstraintError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parameter bags
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CommonParams:
    """Shared recognition parameters.

    k, l_max mirror the hierarchy; m is the number of representatives per
    concept; q the per-neuron failure probability (p = 1 - q derived exactly);
    zeta the Chernoff concentration parameter; r1 <= r2 the recognition
    thresholds.
    """

    k: int
    l_max: int
    m: int
    q: float
    zeta: float
    r1: float
    r2: float

    def __post_init__(self):
        if self.k < 1 or self.l_max < 1:
            raise ValueError("invariant violated: k >= 1 and l_max >= 1")
        if self.m < 1:
            raise ValueError("invariant violated: m >= 1")
        for name in ("q", "zeta", "r1", "r2"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"invariant violated: {name} in [0, 1], got {v}")
        if frac(self.r1) > frac(self.r2):
            raise ValueError("invariant violated: r1 <= r2")

    @property
    def p(self) -> float:
        return 1.0 - self.q

    @property
    def p_frac(self) -> Fraction:
        return 1 - frac(self.q)


@dataclass(frozen=True)
class ConnectivityParams:
    """Connectivity coefficients for the partial-wiring representations.

    a bounds per-child in-degree for plain low-connectivity reps and for
    class-1 reps of lateral networks; a1/a2/m1/m2 describe the class-2 reps
    (reduced per-child quota a1, peer quota a2, class sizes m1 + m2 = m).
    """

    a: float
    a1: float | None = None
    a2: float | None = None
    m1: int | None = None
    m2: int | None = None

    def __post_init__(self):
        if not 0 <= self.a <= 1:
            raise ValueError("invariant violated: a in [0, 1]")
        if self.a1 is not None and not 0 <= self.a1 <= self.a:
            raise ValueError("invariant violated: a1 in [0, a]")
        if self.a2 is not None and not 0 <= self.a2 <= 1:
            raise ValueError("invariant violated: a2 in [0, 1]")
        for name in ("m1", "m2"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"invariant violated: {name} >= 0")

    def require_lateral(self, k: int, m: int) -> None:
        """Full validation for a lateral build against a concrete k and m."""
        if self.a1 is None or self.a2 is None or self.m1 is None or self.m2 is None:
            raise ValueError("lateral networks need a1, a2, m1 and m2")
        if self.m1 + self.m2 != m:
            raise ValueError(f"invariant violated: m1 + m2 = m ({self.m1}+{self.m2} != {m})")
        if frac(self.a2) < (frac(self.a) - frac(self.a1)) * k:
            raise ValueError("invariant violated: a2 >= (a - a1)*k")


# ---------------------------------------------------------------------------
# elementary pieces
# ---------------------------------------------------------------------------


def chernoff_lower_tail(mu: float, zeta: float) -> float:
    """Pr[X <= (1 - zeta) * mu] <= exp(-mu * zeta^2 / 2) for X with mean mu."""
    if mu <= 0:
        raise ValueError("mu > 0 required")
    if not 0 <= zeta <= 1:
        raise ValueError("zeta in [0, 1] required")
    return math.exp(max(-mu * zeta * zeta / 2.0, _LOG_FLOAT_MIN * 2))


def log_chernoff_lower_tail(mu: float, zeta: float) -> float:
    return -mu * zeta * zeta / 2.0


def epsilon(cp: CommonParams) -> float:
    """Recognition approximation parameter: 1 - p(1 - zeta)."""
    return 1.0 - cp.p * (1.0 - cp.zeta)


def firing_floor(cp: CommonParams) -> Fraction:
    """(1 - epsilon) * m = m * p * (1 - zeta), exact."""
    return cp.m * cp.p_frac * (1 - frac(cp.zeta))


def firing_floor_count(cp: CommonParams) -> int:
    """Smallest integer firing count that meets the floor (ties succeed)."""
    return ceil_frac(firing_floor(cp))


def tau_high(cp: CommonParams) -> float:
    """Threshold for fully wired feed-forward networks: r2*k*m*p*(1-zeta)."""
    return float(frac(cp.r2) * cp.k * cp.m * cp.p_frac * (1 - frac(cp.zeta)))


def tau_high_frac(cp: CommonParams) -> Fraction:
    return frac(cp.r2) * cp.k * cp.m * cp.p_frac * (1 - frac(cp.zeta))


def tau_low(cp: CommonParams, a: float) -> float:
    """Threshold for partially wired networks: a*r2*k*m*p*(1-zeta)."""
    return float(frac(a) * tau_high_frac(cp))


def tau_lateral(cp: CommonParams, a: float) -> float:
    """Lateral networks keep the low-connectivity threshold."""
    return tau_low(cp, a)


def _tree_sizes(k: int, level: int, paper_style: bool) -> tuple[float, float]:
    """(descendant count, count of internal descendants) coefficients."""
    if paper_style:
        return float(k**level), float(k ** (level - 1)) if level >= 1 else 0.0
    if k == 1:
        return float(level + 1), float(level)
    return (k ** (level + 1) - 1) / (k - 1), (k**level - 1) / (k - 1)


# ---------------------------------------------------------------------------
# per-level failure bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaTerm:
    label: str
    coefficient: float
    exponent: float  # the E in coefficient * exp(-E)
    log_value: float
    value: float


@dataclass(frozen=True)
class DeltaLevel:
    level: int
    value: float  # raw bound, may exceed 1 (vacuous) or underflow to 0.0
    log_value: float  # always finite information
    clamped: float  # min(max(value, 0), 1) for reporting
    terms: tuple[DeltaTerm, ...] = field(default_factory=tuple)


def _term(label: str, coefficient: float, exponent: float) -> DeltaTerm:
    if coefficient <= 0:
        return DeltaTerm(label, coefficient, exponent, -math.inf, 0.0)
    log_v = math.log(coefficient) - exponent
    value = math.exp(log_v) if log_v > _LOG_FLOAT_MIN else 0.0
    return DeltaTerm(label, coefficient, exponent, log_v, value)


def _level_from_terms(level: int, terms: list[DeltaTerm]) -> DeltaLevel:
    log_v = logsumexp(t.log_value for t in terms)
    if log_v <= _LOG_FLOAT_MIN:
        value = 0.0
    elif log_v >= 700.0:
        value = math.inf
    else:
        value = math.exp(log_v)
    return DeltaLevel(level, value, log_v, min(max(value, 0.0), 1.0), tuple(terms))


def delta_ff_high(cp: CommonParams, paper_style: bool = False) -> list[DeltaLevel]:
    """Failure bound per level for fully wired feed-forward networks:
    (descendant count) * exp(-m*p*zeta^2/2)."""
    e0 = cp.m * cp.p * cp.zeta**2 / 2.0
    out = []
    for lvl in range(cp.l_max + 1):
        desc, _ = _tree_sizes(cp.k, lvl, paper_style)
        out.append(_level_from_terms(lvl, [_term("rep-survival", desc, e0)]))
    return out


def delta_ff_low(cp: CommonParams, conn: ConnectivityParams, paper_style: bool = False) -> list[DeltaLevel]:
    """Two-term failure bound for partially wired feed-forward networks.

    Adds, for levels >= 1, a union bound over every (rep, child) incoming
    group: internal-descendants * k*m * exp(-a*m*p*zeta^2/2).
    """
    e0 = cp.m * cp.p * cp.zeta**2 / 2.0
    ea = conn.a * cp.m * cp.p * cp.zeta**2 / 2.0
    out = []
    for lvl in range(cp.l_max + 1):
        desc, internal = _tree_sizes(cp.k, lvl, paper_style)
        terms = [_term("rep-survival", desc, e0)]
        if lvl >= 1:
            terms.append(_term("incoming-group-survival", internal * cp.k * cp.m, ea))
        out.append(_level_from_terms(lvl, terms))
    return out


def delta_lateral(cp: CommonParams, conn: ConnectivityParams, paper_style: bool = False) -> list[DeltaLevel]:
    """Four-term failure bound for lateral networks.

    Per level >= 1: rep survival, class-1 forward groups (k*m1 at quota a),
    class-2 forward groups (k*m2 at quota a1) and class-2 peer groups
    (m2 at quota a2), each scaled by the internal-descendant count.
    """
    if conn.a1 is None or conn.a2 is None or conn.m1 is None or conn.m2 is None:
        raise ValueError("lateral bound needs a1, a2, m1 and m2")
    e0 = cp.m * cp.p * cp.zeta**2 / 2.0
    ea = conn.a * cp.m * cp.p * cp.zeta**2 / 2.0
    ea1 = conn.a1 * cp.m * cp.p * cp.zeta**2 / 2.0
    ea2 = conn.a2 * cp.m * cp.p * cp.zeta**2 / 2.0
    out = []
    for lvl in range(cp.l_max + 1):
        desc, internal = _tree_sizes(cp.k, lvl, paper_style)
        terms = [_term("rep-survival", desc, e0)]
        if lvl >= 1:
            terms.append(_term("class1-forward-groups", internal * cp.k * conn.m1, ea))
            terms.append(_term("class2-forward-groups", internal * cp.k * conn.m2, ea1))
            terms.append(_term("class2-peer-groups", internal * conn.m2, ea2))
        out.append(_level_from_terms(lvl, terms))
    return out


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundsReport:
    kind: str
    tau: float
    epsilon: float
    levels: tuple[DeltaLevel, ...]
    paper_style: bool

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "paper_style": self.paper_style,
            "tau": self.tau,
            "epsilon": self.epsilon,
            "delta": [
                {
                    "level": lv.level,
                    "value": lv.value,
                    "log_value": lv.log_value,
                    "clamped": lv.clamped,
                    "terms": [
                        {
                            "label": t.label,
                            "coefficient": t.coefficient,
                            "exponent": t.exponent,
                            "value": t.value,
                            "log_value": t.log_value,
                        }
                        for t in lv.terms
                    ],
                }
                for lv in self.levels
            ],
        }

    def table(self) -> str:
        lines = [
            f"kind={self.kind}  paper_style={self.paper_style}",
            f"tau={self.tau:.6g}  epsilon={self.epsilon:.6g}",
            f"{'level':>5}  {'delta':>12}  {'clamped':>10}  {'log':>12}  terms",
        ]
        for lv in self.levels:
            terms = " + ".join(f"{t.value:.3e}" for t in lv.terms)
            lines.append(
                f"{lv.level:>5}  {lv.value:>12.5e}  {lv.clamped:>10.5f}  {lv.log_value:>12.4f}  {terms}"
            )
        return "\n".join(lines)


def bounds_report(
    kind: str,
    cp: CommonParams,
    conn: ConnectivityParams | None = None,
    paper_style: bool = False,
) -> BoundsReport:
    if kind == "high_ff":
        return BoundsReport(kind, tau_high(cp), epsilon(cp), tuple(delta_ff_high(cp, paper_style)), paper_style)
    if conn is None:
        raise ValueError(f"kind {kind!r} needs connectivity parameters")
    if kind == "low_ff":
        return BoundsReport(kind, tau_low(cp, conn.a), epsilon(cp), tuple(delta_ff_low(cp, conn, paper_style)), paper_style)
    if kind == "lateral":
        conn.require_lateral(cp.k, cp.m)
        return BoundsReport(kind, tau_lateral(cp, conn.a), epsilon(cp), tuple(delta_lateral(cp, conn, paper_style)), paper_style)
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# binomial tails (log-gamma accumulation, good to km ~ 1e4)
# ---------------------------------------------------------------------------


def log_binom_upper_tail(n: int, p: float, t: int) -> float:
    """log Pr[Binomial(n, p) >= t], summed in log space."""
    if n < 0:
        raise ValueError("n >= 0 required")
    if not 0 <= p <= 1:
        raise ValueError("p in [0, 1] required")
    if t <= 0:
        return 0.0
    if t > n:
        return -math.inf
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return 0.0
    log_p, log_1p = math.log(p), math.log1p(-p)
    lg_n1 = math.lgamma(n + 1)
    terms = (
        lg_n1 - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * log_p + (n - i) * log_1p
        for i in range(t, n + 1)
    )
    return min(logsumexp(terms), 0.0)


def binom_upper_tail(n: int, p: float, t: int) -> float:
    return math.exp(log_binom_upper_tail(n, p, t))


def constraint2_analytic(k: int, m: int, p_prime: float, a: float, b: float) -> float:
    """Ratio Pr(A)/Pr(B) for the per-child vs total in-degree audit.

    A: each of k groups of m candidate edges keeps >= ceil(a*m);
    B: the pooled k*m candidate edges keep >= ceil(b*k*m) in total.
    Pr(A) = UpperTail(m, p', ceil(a*m))^k, Pr(B) = UpperTail(km, p', ceil(b*km)).
    Note the ratio may exceed 1: A is not contained in B when a < b, so this
    is the audit's bookkeeping quantity rather than a true conditional.
    """
    if not 0 <= p_prime <= 1:
        raise ValueError("p_prime in [0, 1] required")
    if frac(a) > frac(b):
        raise ValueError("a <= b required")
    t_a = ceil_frac(frac(a) * m)
    t_b = ceil_frac(frac(b) * k * m)
    log_a = k * log_binom_upper_tail(m, p_prime, t_a)
    log_b = log_binom_upper_tail(k * m, p_prime, t_b)
    if log_b == -math.inf:
        raise UnsatisfiableConstraintError(
            f"Pr(total >= {t_b}) = 0 with p'={p_prime}: constraint unsatisfiable"
        )
    return math.exp(log_a - log_b)
