import math
from math import comb

import pytest

from multirep.bounds import (
    CommonParams,
    ConnectivityParams,
    UnsatisfiableConstraintError,
    binom_upper_tail,
    bounds_report,
    chernoff_lower_tail,
    constraint2_analytic,
    delta_ff_high,
    delta_ff_low,
    delta_lateral,
    epsilon,
    firing_floor,
    log_binom_upper_tail,
    tau_high,
    tau_lateral,
    tau_low,
)

CP320 = CommonParams(k=4, l_max=4, m=320, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)
CP640 = CommonParams(k=4, l_max=4, m=640, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)


def exact_upper_tail(n, p, t):
    """Oracle: direct binomial sum with exact combinatorics."""
    return sum(comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(max(t, 0), n + 1))


def test_common_params_validation():
    with pytest.raises(ValueError, match="r1 <= r2"):
        CommonParams(k=4, l_max=4, m=320, q=0.0, zeta=0.25, r1=0.8, r2=0.75)
    with pytest.raises(ValueError, match="zeta"):
        CommonParams(k=4, l_max=4, m=320, q=0.0, zeta=1.5, r1=0.5, r2=0.75)
    cp = CommonParams(k=4, l_max=4, m=320, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)
    assert cp.p == 1 - cp.q


def test_connectivity_params_validation():
    with pytest.raises(ValueError, match="a1 in"):
        ConnectivityParams(a=0.5, a1=0.6)
    conn = ConnectivityParams(a=0.75, a1=11 / 16, a2=0.25, m1=480, m2=160)
    conn.require_lateral(k=4, m=640)
    bad = ConnectivityParams(a=0.75, a1=0.5, a2=0.25, m1=480, m2=160)
    with pytest.raises(ValueError, match="a2 >="):
        bad.require_lateral(k=4, m=640)  # needs a2 >= (a-a1)k = 1
    with pytest.raises(ValueError, match="m1 \\+ m2"):
        ConnectivityParams(a=0.75, a1=11 / 16, a2=0.25, m1=480, m2=100).require_lateral(4, 640)


def test_chernoff_lower_tail_values():
    # mu = 320*(31/32) = 310, zeta = 1/4 -> exp(-9.6875)
    v = chernoff_lower_tail(310, 0.25)
    assert v == pytest.approx(math.exp(-9.6875))
    assert v == pytest.approx(6.19e-5, rel=5e-3)
    assert chernoff_lower_tail(100, 0.0) == 1.0
    assert chernoff_lower_tail(620, 0.25) < chernoff_lower_tail(310, 0.25)
    with pytest.raises(ValueError):
        chernoff_lower_tail(0, 0.25)


def test_tau_values():
    assert tau_high(CP320) == pytest.approx(697.5)
    cp = CP640
    assert tau_low(cp, 1.0) == pytest.approx(tau_high(cp))
    assert tau_low(cp, 0.75) == pytest.approx(1046.25)
    assert tau_lateral(cp, 0.75) == pytest.approx(1046.25)


def test_epsilon_values():
    cp0 = CommonParams(k=4, l_max=4, m=320, q=0.0, zeta=0.0, r1=0.5, r2=0.75)
    assert epsilon(cp0) == 0.0
    assert epsilon(CP320) == pytest.approx(35 / 128)
    # firing floor m*p*(1-zeta) = 320 - 320*35/128 = 232.5
    assert float(firing_floor(CP320)) == pytest.approx(232.5)


def test_delta_ff_high_worked_values():
    levels = delta_ff_high(CP320)
    assert levels[4].value == pytest.approx(341 * math.exp(-9.6875), rel=1e-12)
    assert levels[4].value == pytest.approx(0.0211, abs=2e-4)
    assert levels[0].value == pytest.approx(math.exp(-9.6875))
    paper = delta_ff_high(CP320, paper_style=True)
    assert paper[4].value == pytest.approx(256 * math.exp(-9.6875), rel=1e-12)
    assert paper[4].value == pytest.approx(0.016, abs=1.5e-3)


def test_delta_ff_high_vanishes_with_m():
    big = CommonParams(k=4, l_max=4, m=100_000, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)
    assert delta_ff_high(big)[4].value < 1e-300 or delta_ff_high(big)[4].value == 0.0
    assert delta_ff_high(big)[4].log_value < delta_ff_high(CP320)[4].log_value


def test_delta_ff_low_worked_values():
    conn = ConnectivityParams(a=0.75)
    levels = delta_ff_low(CP640, conn)
    t1, t2 = levels[4].terms
    assert t1.value == pytest.approx(341 * math.exp(-19.375), rel=1e-12)
    assert t2.value == pytest.approx(85 * 4 * 640 * math.exp(-14.53125), rel=1e-12)
    assert levels[4].value == pytest.approx(t1.value + t2.value, rel=1e-9)
    assert levels[4].value == pytest.approx(0.106, abs=1e-3)
    paper = delta_ff_low(CP640, conn, paper_style=True)
    assert paper[4].terms[1].value == pytest.approx(64 * 4 * 640 * math.exp(-14.53125), rel=1e-12)
    assert paper[4].terms[1].value == pytest.approx(0.083, abs=8e-3)
    assert paper[4].terms[0].value < 1e-5


def test_delta_ff_low_a1_reduces_to_extra_term():
    conn1 = ConnectivityParams(a=1.0)
    low = delta_ff_low(CP320, conn1)
    high = delta_ff_high(CP320)
    for lvl in range(1, 5):
        assert low[lvl].value > high[lvl].value
        assert low[lvl].terms[1].exponent == pytest.approx(low[lvl].terms[0].exponent)


def test_delta_lateral_worked_values():
    conn = ConnectivityParams(a=0.75, a1=11 / 16, a2=0.75, m1=320, m2=320)
    levels = delta_lateral(CP640, conn)
    t1, t2, t3, t4 = levels[4].terms
    assert t1.value == pytest.approx(1.3131e-06, rel=1e-3)
    assert t2.value == pytest.approx(0.0531848, rel=1e-5)
    assert t3.value == pytest.approx(0.1785216, rel=1e-5)
    assert t4.value == pytest.approx(0.0132962, rel=1e-5)
    assert levels[4].value == pytest.approx(0.245, abs=5e-4)
    paper = delta_lateral(CP640, conn, paper_style=True)
    assert paper[4].value == pytest.approx(0.21, abs=0.03)


def test_delta_lateral_m2_zero_collapses():
    conn = ConnectivityParams(a=0.75, a1=0.75, a2=0.0, m1=640, m2=0)
    lat = delta_lateral(CP640, conn)
    low = delta_ff_low(CP640, ConnectivityParams(a=0.75))
    for lvl in range(5):
        assert lat[lvl].value == pytest.approx(low[lvl].value, rel=1e-12)


def test_delta_log_space_survives_huge_exponents():
    # exponent magnitude ~1e4: value underflows but the log stays exact
    cp = CommonParams(k=4, l_max=2, m=661_939, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)
    e0 = cp.m * cp.p * cp.zeta**2 / 2
    assert e0 > 1e4
    lv = delta_ff_high(cp)[2]
    assert lv.value == 0.0
    assert lv.log_value == pytest.approx(math.log(21) - e0, rel=1e-12)


def test_delta_clamping():
    # small m makes the bound vacuous; clamped to 1 but raw retained
    cp = CommonParams(k=4, l_max=4, m=4, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)
    lv = delta_ff_high(cp)[4]
    assert lv.value > 1.0
    assert lv.clamped == 1.0


def test_bounds_report_assembly():
    conn = ConnectivityParams(a=0.75, a1=11 / 16, a2=0.75, m1=320, m2=320)
    rep = bounds_report("lateral", CP640, conn)
    doc = rep.to_json()
    assert doc["kind"] == "lateral"
    assert len(doc["delta"]) == 5
    assert len(doc["delta"][4]["terms"]) == 4
    assert "tau" in doc and "epsilon" in doc
    assert "level" in rep.table()
    with pytest.raises(ValueError):
        bounds_report("low_ff", CP640, None)


def test_binom_upper_tail_against_exact_enumeration():
    for n, p, t in [(10, 0.3, 4), (25, 0.9, 20), (8, 0.5, 0), (8, 0.5, 9), (12, 0.0, 3), (12, 1.0, 12)]:
        assert binom_upper_tail(n, p, t) == pytest.approx(exact_upper_tail(n, p, t), rel=1e-10, abs=1e-300)


def test_binom_upper_tail_log_space_large_n():
    # far tail of a large binomial: log value stays finite and ordered
    lg = log_binom_upper_tail(10_000, 0.5, 9_000)
    assert -math.inf < lg < math.log(1e-300)


def test_constraint2_analytic_values():
    assert constraint2_analytic(2, 4, 1.0, 0.5, 0.75) == 1.0
    assert constraint2_analytic(2, 4, 0.3, 0.0, 0.0) == 1.0
    # k=2, m=4, p'=0.9, a=0.5, b=0.75: oracle from exact tails
    expected = exact_upper_tail(4, 0.9, 2) ** 2 / exact_upper_tail(8, 0.9, 6)
    assert constraint2_analytic(2, 4, 0.9, 0.5, 0.75) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(ValueError, match="a <= b"):
        constraint2_analytic(2, 4, 0.9, 0.8, 0.75)
    with pytest.raises(UnsatisfiableConstraintError):
        constraint2_analytic(2, 4, 0.0, 0.5, 0.75)


def test_delta_monotonicity_properties():
    conn = ConnectivityParams(a=0.75, a1=11 / 16, a2=0.25, m1=480, m2=160)
    for fn in (
        lambda cp: delta_ff_high(cp),
        lambda cp: delta_ff_low(cp, conn),
        lambda cp: delta_lateral(cp, ConnectivityParams(a=0.75, a1=11 / 16, a2=0.25, m1=cp.m - 160, m2=160)),
    ):
        levels = fn(CP640)
        vals = [lv.value for lv in levels]
        assert all(x <= y + 1e-15 for x, y in zip(vals, vals[1:])), "nondecreasing in level"
    # strictly decreasing in m
    for m_small, m_big in [(320, 640), (640, 1280)]:
        cp_s = CommonParams(k=4, l_max=4, m=m_small, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)
        cp_b = CommonParams(k=4, l_max=4, m=m_big, q=1 / 32, zeta=0.25, r1=0.5, r2=0.75)
        for lvl in range(5):
            assert delta_ff_high(cp_b)[lvl].value < delta_ff_high(cp_s)[lvl].value


def test_delta_kind_ordering():
    # high <= low <= lateral pointwise for a1 <= a, m1 <= m
    conn = ConnectivityParams(a=0.75, a1=11 / 16, a2=0.25, m1=480, m2=160)
    high = delta_ff_high(CP640)
    low = delta_ff_low(CP640, conn)
    lat = delta_lateral(CP640, conn)
    for lvl in range(5):
        assert high[lvl].value <= low[lvl].value + 1e-18
        assert low[lvl].value <= lat[lvl].value + 1e-18


def test_chernoff_bound_validity_monte_carlo(rng):
    # empirical Pr[X <= (1-zeta)mp] <= exp(-mp zeta^2/2) + 3 standard errors
    for m, p, zeta in [(200, 0.9, 0.2), (64, 0.75, 0.25), (320, 31 / 32, 0.05)]:
        n = 40_000
        draws = rng.binomial(m, p, size=n)
        emp = float((draws <= (1 - zeta) * m * p).mean())
        bound = chernoff_lower_tail(m * p, zeta)
        se = math.sqrt(max(emp * (1 - emp), 1e-12) / n)
        assert emp <= bound + 3 * se
