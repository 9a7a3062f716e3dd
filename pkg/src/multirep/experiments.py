"""Monte Carlo harness and exhaustive-enumeration oracle.

A sweep point builds (or learns) its network once, then runs many independent
failure trials against it.  Trial i of sweep point s draws its mask from a
dedicated stream seeded by (base_seed, s, i), so results are bit-identical
regardless of batching or thread count.  The enumeration oracle walks every
failure pattern of the target subtree's reps and produces exact outcome
probabilities for cross-checking the sampled estimates.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import bounds as bnd
from .bounds import CommonParams, ConnectivityParams
from .hierarchy import ConceptHierarchy, minimal_support_set, sub_support_set
from .network import FailureMask, LayeredNetwork
from .recognition import PresentationSchedule, run_ff, run_lateral
from .representation import ReprSpec, build_high, build_lateral, build_low
from .stats import frac, wilson_interval

CSV_COLUMNS = [
    "kind", "l", "k", "m", "q", "zeta", "a", "a1", "a2", "m1", "m2", "r1", "r2",
    "trials", "failures", "rate", "ci_lo", "ci_hi", "delta_exact", "delta_paper_style",
    "bound_satisfied", "nonfire_violations", "mean_fired_fraction", "first_stable_time_p95",
]

DEFAULT_BATCH = 512


# ---------------------------------------------------------------------------
# failure sampling
# ---------------------------------------------------------------------------


def sample_failures(net: LayeredNetwork, q: float, rng: np.random.Generator) -> FailureMask:
    """Independent Bernoulli(q) failure per neuron, all layers including
    inputs.  Bits are drawn in (layer, index) order from a single uniform
    vector so the mask is a pure function of the generator state."""
    if not 0 <= q <= 1:
        raise ValueError("q in [0, 1] required")
    width = net.reps.layer_width
    n_layers = net.hierarchy.params.l_max + 1
    u = rng.random(width * n_layers)
    survive = u >= q
    return FailureMask([survive[i * width : (i + 1) * width].reshape(width, 1) for i in range(n_layers)])


def trial_rng(base_seed: int, sweep_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(sweep_index, trial)))


def mask_batch(net: LayeredNetwork, q: float, base_seed: int, sweep_index: int, trials: range) -> FailureMask:
    """Stack per-trial masks; trial i always sees the same bits no matter how
    the batch boundaries fall."""
    width = net.reps.layer_width
    n_layers = net.hierarchy.params.l_max + 1
    cols = []
    for i in trials:
        u = trial_rng(base_seed, sweep_index, i).random(width * n_layers)
        cols.append(u >= q)
    block = np.stack(cols, axis=1)  # [width*layers, T]
    return FailureMask([block[i * width : (i + 1) * width, :] for i in range(n_layers)])


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

SWEEP_AXES = ("m", "q", "zeta", "a", "a1", "a2", "m1", "m2", "r1", "r2")


@dataclass(frozen=True)
class ExperimentConfig:
    hierarchy: "object"  # HierarchyParams
    common: CommonParams
    repr_spec: ReprSpec
    conn: ConnectivityParams | None = None
    learn_config: "object | None" = None  # learning.LearnConfig when sweeping learned nets
    target_level: int | None = None  # default: top level
    target_index: int = 0
    scope: str = "subtree"
    b_generator: str = "minimal-r2"  # full-leaves | minimal-r2 | sub-r1
    trials: int = 1000
    base_seed: int = 0
    horizon: int | None = None
    sweep: dict = field(default_factory=dict)
    batch_size: int = DEFAULT_BATCH
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("invariant violated: trials >= 1")
        for axis, values in self.sweep.items():
            if axis not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {axis!r}")
            if not values:
                raise ValueError(f"sweep axis {axis!r} must be non-empty")
        if self.b_generator not in ("full-leaves", "minimal-r2", "sub-r1"):
            raise ValueError(f"unknown B generator {self.b_generator!r}")


def sweep_points(cfg: ExperimentConfig) -> list[dict]:
    """Cross product of the sweep axes in canonical order; a single empty
    point when no axes are given."""
    axes = [a for a in SWEEP_AXES if a in cfg.sweep]
    points = [{}]
    for axis in axes:
        points = [dict(p, **{axis: v}) for p in points for v in cfg.sweep[axis]]
    return points


def _resolve_params(cfg: ExperimentConfig, point: dict):
    cp_kw = {}
    for name in ("m", "q", "zeta", "r1", "r2"):
        if name in point:
            cp_kw[name] = point[name]
    cp = replace(cfg.common, **cp_kw) if cp_kw else cfg.common
    conn = cfg.conn
    conn_kw = {k: v for k, v in point.items() if k in ("a", "a1", "a2", "m1", "m2")}
    if conn_kw:
        if conn is None:
            raise ValueError("sweeping connectivity axes needs base connectivity params")
        conn = replace(conn, **conn_kw)
    return cp, conn


def _build_network(cfg: ExperimentConfig, cp, conn, hierarchy: ConceptHierarchy, target: int) -> LayeredNetwork:
    if cfg.learn_config is not None:
        from . import learning

        return learning.learn(hierarchy, cp, conn, cfg.learn_config, target)[0]
    kind = cfg.repr_spec.kind
    if kind == "high_ff":
        return build_high(hierarchy, cp, target=target, scope=cfg.scope)
    if kind == "low_ff":
        return build_low(hierarchy, cp, conn, cfg.repr_spec, target=target, scope=cfg.scope)
    return build_lateral(hierarchy, cp, conn, cfg.repr_spec, target=target, scope=cfg.scope)


def _generate_B(h: ConceptHierarchy, cp, generator: str, target: int) -> frozenset:
    if generator == "full-leaves":
        return h.leaves(target)
    if generator == "minimal-r2":
        return minimal_support_set(h, target, cp.r2)
    return sub_support_set(h, target, cp.r1)


def _delta_for(kind: str, cp, conn, level: int, paper_style: bool) -> float:
    if kind == "high_ff":
        return bnd.delta_ff_high(cp, paper_style)[level].value
    if kind == "low_ff":
        return bnd.delta_ff_low(cp, conn, paper_style)[level].value
    return bnd.delta_lateral(cp, conn, paper_style)[level].value


# ---------------------------------------------------------------------------
# trial statistics
# ---------------------------------------------------------------------------


@dataclass
class TrialStats:
    kind: str
    level: int
    cp: CommonParams
    conn: ConnectivityParams | None
    trials: int
    successes: int
    nonfire_violations: int
    delta_exact: float
    delta_paper_style: float
    mean_fired_fraction: float | None
    first_stable_time_p95: float | None
    b_generator: str

    @property
    def failures(self) -> int:
        return self.trials - self.successes

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.trials)

    @property
    def bound_satisfied(self) -> bool:
        if self.b_generator == "sub-r1":
            return self.nonfire_violations == 0
        lo, hi = self.ci
        return hi <= self.delta_exact or self.delta_exact >= 1.0

    def row(self) -> dict:
        lo, hi = self.ci
        conn = self.conn
        return {
            "kind": self.kind,
            "l": self.level,
            "k": self.cp.k,
            "m": self.cp.m,
            "q": self.cp.q,
            "zeta": self.cp.zeta,
            "a": conn.a if conn else "",
            "a1": conn.a1 if conn and conn.a1 is not None else "",
            "a2": conn.a2 if conn and conn.a2 is not None else "",
            "m1": conn.m1 if conn and conn.m1 is not None else "",
            "m2": conn.m2 if conn and conn.m2 is not None else "",
            "r1": self.cp.r1,
            "r2": self.cp.r2,
            "trials": self.trials,
            "failures": self.failures,
            "rate": self.rate,
            "ci_lo": lo,
            "ci_hi": hi,
            "delta_exact": self.delta_exact,
            "delta_paper_style": self.delta_paper_style,
            "bound_satisfied": self.bound_satisfied,
            "nonfire_violations": self.nonfire_violations,
            "mean_fired_fraction": "" if self.mean_fired_fraction is None else self.mean_fired_fraction,
            "first_stable_time_p95": "" if self.first_stable_time_p95 is None else self.first_stable_time_p95,
        }


def _run_point(cfg: ExperimentConfig, sweep_index: int, point: dict, hierarchy: ConceptHierarchy) -> TrialStats:
    cp, conn = _resolve_params(cfg, point)
    target_level = cfg.target_level if cfg.target_level is not None else hierarchy.params.l_max
    target = hierarchy.concepts_at(target_level)[cfg.target_index]
    net = _build_network(cfg, cp, conn, hierarchy, target)
    B = _generate_B(hierarchy, cp, cfg.b_generator, target)
    lateral = net.kind == "lateral"
    mode = "continuous" if lateral else "once-at-0"
    schedule = PresentationSchedule(B, mode, cfg.horizon)
    level = hierarchy.level_of(target)

    starts = list(range(0, cfg.trials, cfg.batch_size))

    def one_batch(start: int):
        idx = range(start, min(start + cfg.batch_size, cfg.trials))
        masks = mask_batch(net, cp.q, cfg.base_seed, sweep_index, idx)
        if lateral:
            out = run_lateral(net, schedule, masks, target, check_timing=False)
            final_counts = out.fired_counts[-1]
            stables = out.stable_times
        else:
            out = run_ff(net, schedule, masks, target)
            final_counts = out.fired_counts[level]
            stables = None
        recognized = np.asarray(out.recognized).reshape(-1)
        fired = np.asarray(out.checked_fired).reshape(-1)
        if cfg.b_generator == "sub-r1":
            succ = ~fired
            viol = int(fired.sum())
        else:
            succ = recognized
            viol = 0
        frac_sum = float(final_counts[succ].sum()) / net.reps.m
        stable_list = stables[succ].tolist() if stables is not None else []
        return int(succ.sum()), viol, frac_sum, stable_list

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(one_batch, starts))
    else:
        results = [one_batch(s) for s in starts]

    successes = sum(r[0] for r in results)
    violations = sum(r[1] for r in results)
    frac_total = sum(r[2] for r in results)
    stable_all = [t for r in results for t in r[3]]

    mean_frac = frac_total / successes if successes else None
    p95 = float(np.percentile(np.array(stable_all), 95, method="higher")) if stable_all else None
    return TrialStats(
        kind=net.kind,
        level=level,
        cp=cp,
        conn=conn,
        trials=cfg.trials,
        successes=successes,
        nonfire_violations=violations,
        delta_exact=_delta_for(net.kind, cp, conn, level, paper_style=False),
        delta_paper_style=_delta_for(net.kind, cp, conn, level, paper_style=True),
        mean_fired_fraction=mean_frac,
        first_stable_time_p95=p95,
        b_generator=cfg.b_generator,
    )


def run_trials(cfg: ExperimentConfig) -> list[TrialStats]:
    from .hierarchy import build_hierarchy

    hierarchy = build_hierarchy(cfg.hierarchy)
    return [_run_point(cfg, s, point, hierarchy) for s, point in enumerate(sweep_points(cfg))]


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------

ENUM_LIMIT = 24


@dataclass
class EnumerationResult:
    success_probability: Fraction
    breakdown: dict  # verdict-ish label -> Fraction
    relevant_neurons: int

    @property
    def failure_probability(self) -> Fraction:
        return 1 - self.success_probability


def enumerate_exact(net: LayeredNetwork, B: frozenset, target: int, q) -> EnumerationResult:
    """Sum q^failed * p^survived over every failure pattern of the target
    subtree's reps, classifying each by recognition outcome.  Exact via
    Fraction arithmetic grouped by (outcome, failure count)."""
    relevant = net.hierarchy.descendants(target)
    R = len(relevant) * net.reps.m
    if R > ENUM_LIMIT:
        raise ValueError(f"instance too large: {R} relevant neurons > {ENUM_LIMIT}")
    qf = frac(q)
    pf = 1 - qf
    lateral = net.kind == "lateral"
    schedule = PresentationSchedule(B, "continuous" if lateral else "once-at-0")

    total = 1 << R
    success_by_fail = np.zeros(R + 1, dtype=np.int64)
    outcome_by_fail = {"recognized": success_by_fail, "not_recognized": np.zeros(R + 1, dtype=np.int64)}
    chunk = 1 << 14
    width = net.reps.layer_width
    n_layers = net.hierarchy.params.l_max + 1
    positions = [(net.hierarchy.level_of(c), net.reps.positions[c]) for c in relevant]

    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        T = codes.size
        bits = ((codes[None, :] >> np.arange(R)[:, None]) & 1).astype(bool)  # [R, T]
        layers = [np.ones((width, T), dtype=bool) for _ in range(n_layers)]
        row = 0
        for lvl, pos in positions:
            layers[lvl][pos, :] = ~bits[row : row + net.reps.m, :]
            row += net.reps.m
        masks = FailureMask(layers)
        if lateral:
            out = run_lateral(net, schedule, masks, target, check_timing=False)
        else:
            out = run_ff(net, schedule, masks, target)
        recognized = np.asarray(out.recognized).reshape(-1)
        n_failed = bits.sum(axis=0)
        for f in range(R + 1):
            sel = n_failed == f
            outcome_by_fail["recognized"][f] += int((recognized & sel).sum())
            outcome_by_fail["not_recognized"][f] += int((~recognized & sel).sum())

    def prob(counts: np.ndarray) -> Fraction:
        return sum((int(counts[f]) * qf**f * pf ** (R - f) for f in range(R + 1)), Fraction(0))

    success = prob(outcome_by_fail["recognized"])
    breakdown = {name: prob(counts) for name, counts in outcome_by_fail.items()}
    assert sum(breakdown.values(), Fraction(0)) == 1
    return EnumerationResult(success, breakdown, R)


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def summarize(stats: list[TrialStats]):
    """(csv_text, json_document) for a completed sweep."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    rows = []
    for st in stats:
        row = st.row()
        rows.append(row)
        writer.writerow(row)
    doc = {
        "points": rows,
        "all_bounds_satisfied": all(st.bound_satisfied for st in stats),
        "total_violations": sum(st.nonfire_violations for st in stats),
    }
    return buf.getvalue(), doc
