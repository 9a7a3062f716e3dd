import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest

from multirep.bounds import CommonParams, ConnectivityParams
from multirep.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    enumerate_exact,
    mask_batch,
    run_trials,
    sample_failures,
    summarize,
    sweep_points,
    trial_rng,
)
from multirep.hierarchy import HierarchyParams, build_hierarchy
from multirep.recognition import PresentationSchedule, run_ff
from multirep.representation import ReprSpec, build_high


def tiny_net(q=0.1, m=2):
    h = build_hierarchy(HierarchyParams(k=2, l_max=1, n=4))
    cp = CommonParams(k=2, l_max=1, m=m, q=q, zeta=0.25, r1=0.1, r2=1.0)
    return h, cp, build_high(h, cp)


def test_sample_failures_extremes(rng):
    h, cp, net = tiny_net()
    assert all(a.all() for a in sample_failures(net, 0.0, rng).layers)
    assert not any(a.any() for a in sample_failures(net, 1.0, rng).layers)
    with pytest.raises(ValueError):
        sample_failures(net, 1.5, rng)


def test_sample_failures_binomial_mean():
    h = build_hierarchy(HierarchyParams(k=2, l_max=1, n=4))
    cp = CommonParams(k=2, l_max=1, m=320, q=1 / 32, zeta=0.25, r1=0.1, r2=1.0)
    net = build_high(h, cp)
    target = h.top_concepts[0]
    n_masks = 10_000
    rng = np.random.default_rng(0)
    total = 0
    masks = mask_batch(net, cp.q, 0, 0, range(n_masks))
    counts = masks.rep_block(net, target).sum(axis=0)
    mean = counts.mean()
    # binomial(320, 31/32): mean 310, sigma/sqrt(n) small
    sigma = math.sqrt(320 * (31 / 32) * (1 / 32))
    assert abs(mean - 310) <= 3 * sigma / math.sqrt(n_masks)


def test_trial_streams_are_batch_invariant():
    h, cp, net = tiny_net()
    whole = mask_batch(net, 0.3, 42, 0, range(0, 8))
    parts = [mask_batch(net, 0.3, 42, 0, range(0, 3)), mask_batch(net, 0.3, 42, 0, range(3, 8))]
    joined = [np.concatenate([p.layers[i] for p in parts], axis=1) for i in range(2)]
    for a, b in zip(whole.layers, joined):
        assert np.array_equal(a, b)
    # and a single-trial sample from the same stream matches column 5
    single = sample_failures(net, 0.3, trial_rng(42, 0, 5))
    for lvl in range(2):
        assert np.array_equal(single.layers[lvl][:, 0], whole.layers[lvl][:, 5])


def test_enumerate_exact_tiny_instance():
    h, cp, net = tiny_net(q=0.1, m=2)
    target = h.top_concepts[0]
    res = enumerate_exact(net, h.leaves(target), target, 0.1)
    assert res.relevant_neurons == 6
    assert float(res.failure_probability) == pytest.approx(0.232363, abs=1e-6)
    assert float(res.success_probability) == pytest.approx(0.767637, abs=1e-6)
    assert sum(res.breakdown.values(), Fraction(0)) == 1


def test_enumerate_exact_q0_certain():
    h, cp, net = tiny_net(q=0.0)
    target = h.top_concepts[0]
    res = enumerate_exact(net, h.leaves(target), target, 0.0)
    assert res.success_probability == 1


def test_enumerate_exact_rejects_large():
    h = build_hierarchy(HierarchyParams(k=2, l_max=1, n=4))
    cp = CommonParams(k=2, l_max=1, m=16, q=0.1, zeta=0.25, r1=0.1, r2=1.0)
    net = build_high(h, cp)
    with pytest.raises(ValueError, match="too large"):
        enumerate_exact(net, h.leaves(h.top_concepts[0]), h.top_concepts[0], 0.1)


def test_enumeration_matches_monte_carlo():
    h, cp, net = tiny_net(q=0.1, m=2)
    target = h.top_concepts[0]
    exact = float(enumerate_exact(net, h.leaves(target), target, 0.1).success_probability)
    sched = PresentationSchedule(h.leaves(target), "once-at-0")
    trials = 20_000
    masks = mask_batch(net, cp.q, 123, 0, range(trials))
    out = run_ff(net, sched, masks, target)
    emp = float(np.asarray(out.recognized).mean())
    se = math.sqrt(exact * (1 - exact) / trials)
    assert abs(emp - exact) <= 3 * se


def make_config(**kw):
    base = dict(
        hierarchy=HierarchyParams(k=2, l_max=2, n=8),
        common=CommonParams(k=2, l_max=2, m=8, q=1 / 32, zeta=0.25, r1=0.25, r2=0.75),
        repr_spec=ReprSpec("high_ff"),
        b_generator="minimal-r2",
        trials=400,
        base_seed=5,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_trials_q0_always_succeeds():
    cfg = make_config(
        common=CommonParams(k=2, l_max=2, m=8, q=0.0, zeta=0.25, r1=0.25, r2=0.75),
        b_generator="full-leaves",
        trials=50,
    )
    st = run_trials(cfg)[0]
    assert st.successes == 50
    assert st.rate == 0.0
    assert st.nonfire_violations == 0
    assert st.mean_fired_fraction == 1.0


def test_run_trials_sub_r1_counts_violations():
    # r1 at the separation bound: zero violations guaranteed
    p = 1 - 1 / 32
    cfg = make_config(
        common=CommonParams(k=2, l_max=2, m=8, q=1 / 32, zeta=0.25, r1=0.75 * p * 0.75, r2=0.75),
        b_generator="sub-r1",
        trials=300,
    )
    st = run_trials(cfg)[0]
    assert st.nonfire_violations == 0
    assert st.bound_satisfied


def test_run_trials_sweep_and_reproducibility():
    cfg = make_config(sweep={"m": [4, 8]}, trials=200)
    stats_a = run_trials(cfg)
    stats_b = run_trials(cfg)
    assert [s.cp.m for s in stats_a] == [4, 8]
    assert [s.failures for s in stats_a] == [s.failures for s in stats_b]
    csv_a, _ = summarize(stats_a)
    csv_b, _ = summarize(stats_b)
    assert csv_a == csv_b  # byte-identical under identical config + seed


def test_run_trials_threads_match_serial():
    cfg_serial = make_config(trials=500, batch_size=64, threads=1)
    cfg_threads = make_config(trials=500, batch_size=64, threads=4)
    a = run_trials(cfg_serial)[0]
    b = run_trials(cfg_threads)[0]
    assert a.failures == b.failures
    assert a.mean_fired_fraction == b.mean_fired_fraction


def test_run_trials_lateral_point():
    cfg = make_config(
        repr_spec=ReprSpec("lateral", seed=3),
        conn=ConnectivityParams(a=0.75, a1=0.625, a2=0.5, m1=4, m2=4),
        b_generator="full-leaves",
        trials=200,
    )
    st = run_trials(cfg)[0]
    assert st.kind == "lateral"
    assert st.first_stable_time_p95 is not None
    assert st.first_stable_time_p95 <= 2 * st.level


def test_sweep_points_cartesian_order():
    cfg = make_config(sweep={"q": [0.0, 0.1], "m": [4, 8]})
    pts = sweep_points(cfg)
    assert pts == [
        {"m": 4, "q": 0.0},
        {"m": 4, "q": 0.1},
        {"m": 8, "q": 0.0},
        {"m": 8, "q": 0.1},
    ]


def test_summarize_schema():
    # header-only CSV for an empty sweep
    text, doc = summarize([])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 1
    # one point -> one row with the full column set
    st = run_trials(make_config(trials=50))[0]
    text, doc = summarize([st])
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert len(parsed) == 1
    assert set(parsed[0]) == set(CSV_COLUMNS)
    assert parsed[0]["bound_satisfied"] in ("True", "False")
    assert doc["points"][0]["trials"] == 50
