"""Recognition runs: present an input set, run the network under a failure
mask, and judge the outcome.

Feed-forward networks present once at time 0 and are judged at t = level(c):
recognized means at least m*p*(1-zeta) reps of the target fire then.  Lateral
networks present continuously and are judged on stability: recognized means
the firing floor holds at every step from some t* through the full horizon
(with a two-step witness window beyond the expected stabilization time).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import firing_floor_count
from .hierarchy import support
from .network import FailureMask, FiringState, LayeredNetwork

STABILITY_HOLDOFF = 2  # stable steps demanded beyond the latest allowed t*


@dataclass(frozen=True)
class PresentationSchedule:
    """B is the presented leaf set; once-at-0 feeds it only at t=0 (the
    feed-forward discipline), continuous feeds it at every step (lateral)."""

    B: frozenset
    mode: str = "once-at-0"  # once-at-0 | continuous
    horizon: int | None = None

    def __post_init__(self):
        if self.mode not in ("once-at-0", "continuous"):
            raise ValueError(f"unknown presentation mode {self.mode!r}")

    def resolved_horizon(self, net: LayeredNetwork) -> int:
        if self.horizon is not None:
            return self.horizon
        l_max = net.hierarchy.params.l_max
        return l_max if self.mode == "once-at-0" else 2 * l_max + STABILITY_HOLDOFF


@dataclass
class RecognitionOutcome:
    target: int
    level: int
    m: int
    floor_count: int  # integer firing floor, ceil(m*p*(1-zeta))
    fired_counts: np.ndarray  # [horizon+1] or [horizon+1, trials]
    recognized: bool | np.ndarray
    support_status: str  # supported | gap | unsupported
    first_stable_time: int | None = None
    stable_times: np.ndarray | None = None  # per-trial t*, -1 when never stable
    checked_fired: bool | np.ndarray = False  # any target rep fired at checked times
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        counts = np.asarray(self.fired_counts)
        return {
            "target": self.target,
            "level": self.level,
            "m": self.m,
            "floor_count": self.floor_count,
            "fired_counts": counts.reshape(counts.shape[0], -1)[:, 0].tolist(),
            "recognized": bool(np.asarray(self.recognized).reshape(-1)[0]),
            "support_status": self.support_status,
            "first_stable_time": self.first_stable_time,
            "violations": list(self.violations),
        }


def support_status(net: LayeredNetwork, B: frozenset, target: int) -> str:
    h, cp = net.hierarchy, net.common
    if target in support(h, B, cp.r2):
        return "supported"
    if target in support(h, B, cp.r1):
        return "gap"
    return "unsupported"


def present(net: LayeredNetwork, schedule: PresentationSchedule, mask: FailureMask, t: int) -> np.ndarray:
    """Layer-0 rep bits at time t: surviving reps of B fire (always in
    continuous mode, only at t=0 in once mode); everything else is silent."""
    rows0 = net.reps.n_rows(0)
    out = np.zeros((rows0, mask.trials), dtype=bool)
    if schedule.mode == "once-at-0" and t != 0:
        return out
    for b in schedule.B:
        if b in net.reps.block and net.hierarchy.level_of(b) == 0:
            out[net.reps.rows(b), :] = mask.rep_block(net, b)
    return out


def _simulate(
    net: LayeredNetwork,
    schedule: PresentationSchedule,
    mask: FailureMask,
    horizon: int,
    track_concepts: list[int],
    pot_out: dict | None = None,
):
    """Run t = 0..horizon; return {concept: int32 [horizon+1, T] fired counts}."""
    T = mask.trials
    counts = {c: np.zeros((horizon + 1, T), dtype=np.int32) for c in track_concepts}
    state = FiringState.zeros(net, T)
    state.layers[0] = present(net, schedule, mask, 0)
    for c in track_concepts:
        counts[c][0] = state.block(net, c).sum(axis=0)
    for t in range(1, horizon + 1):
        state = net.step(state, mask, pot_out=pot_out)
        state.layers[0] = present(net, schedule, mask, t)
        for c in track_concepts:
            counts[c][t] = state.block(net, c).sum(axis=0)
    return counts


def run_ff(
    net: LayeredNetwork,
    schedule: PresentationSchedule,
    mask: FailureMask,
    target: int,
) -> RecognitionOutcome:
    """Feed-forward recognition: one presentation wave, judged at t = level."""
    if net.topology != "feed_forward":
        raise ValueError("run_ff needs a feed-forward network")
    if schedule.mode != "once-at-0":
        raise ValueError("feed-forward runs present once at time 0")
    counts = batch_run_ff(net, schedule, mask, target)
    return _single_outcome_ff(net, schedule, counts, target)


def batch_run_ff(net, schedule, mask, target):
    horizon = max(schedule.resolved_horizon(net), net.hierarchy.level_of(target))
    return _simulate(net, schedule, mask, horizon, [target])[target]


def _single_outcome_ff(net, schedule, counts, target) -> RecognitionOutcome:
    lvl = net.hierarchy.level_of(target)
    floor = firing_floor_count(net.common)
    at_check = counts[lvl]
    recognized = at_check >= floor
    outcome = RecognitionOutcome(
        target=target,
        level=lvl,
        m=net.reps.m,
        floor_count=floor,
        fired_counts=counts,
        recognized=bool(recognized[0]) if recognized.size == 1 else recognized,
        support_status=support_status(net, schedule.B, target),
        checked_fired=bool(at_check[0] > 0) if at_check.size == 1 else at_check > 0,
    )
    return outcome


def run_lateral(
    net: LayeredNetwork,
    schedule: PresentationSchedule,
    mask: FailureMask,
    target: int,
    check_timing: bool | None = None,
) -> RecognitionOutcome:
    """Lateral recognition: continuous presentation, judged on stability.

    When the relevant reps are failure-free (or check_timing is forced on),
    additionally verifies the expected stabilization schedule for every
    supported descendant: class-1 thresholds met from t = 2*level-1 on,
    class-2 from t = 2*level on.
    """
    if net.kind != "lateral":
        raise ValueError("run_lateral needs a lateral network")
    if schedule.mode != "continuous":
        raise ValueError("lateral runs present continuously")
    lvl = net.hierarchy.level_of(target)
    horizon = schedule.resolved_horizon(net)
    if horizon < 2 * lvl:
        raise ValueError(f"horizon {horizon} < 2*level = {2 * lvl}: too small to judge stability")

    relevant = net.hierarchy.descendants(target)
    status = support_status(net, schedule.B, target)
    if check_timing is None:
        check_timing = status == "supported" and bool(
            mask.all_relevant_survive(net, relevant).all()
        )
    pot_out: dict | None = {} if check_timing else None
    counts = _simulate(net, schedule, mask, horizon, [target], pot_out=pot_out)[target]

    floor = firing_floor_count(net.common)
    ok = counts >= floor  # [horizon+1, T]
    stable_from = _first_stable(ok)
    latest_start = horizon - STABILITY_HOLDOFF
    recognized = (stable_from >= 0) & (stable_from <= latest_start)
    fst = int(stable_from[0]) if stable_from.size == 1 and stable_from[0] >= 0 else None

    violations: list[str] = []
    if check_timing and pot_out is not None:
        violations = _timing_violations(net, schedule, pot_out, relevant, horizon)

    any_fired = (counts > 0).any(axis=0)
    return RecognitionOutcome(
        target=target,
        level=lvl,
        m=net.reps.m,
        floor_count=floor,
        fired_counts=counts,
        recognized=bool(recognized[0]) if recognized.size == 1 else recognized,
        support_status=status,
        first_stable_time=fst,
        stable_times=stable_from,
        checked_fired=bool(any_fired[0]) if any_fired.size == 1 else any_fired,
        violations=violations,
    )


def _first_stable(ok: np.ndarray) -> np.ndarray:
    """Per trial, smallest t such that ok holds at every step in [t, horizon];
    -1 when even the final step fails."""
    rev_all = np.flip(np.logical_and.accumulate(np.flip(ok, axis=0), axis=0), axis=0)
    never = ~rev_all.any(axis=0)
    first = np.argmax(rev_all, axis=0).astype(np.int64)
    first[never] = -1
    # argmax finds the first True of the suffix-and, which is exactly t*
    return first


def _timing_violations(net, schedule, pot_out, relevant, horizon) -> list[str]:
    cp = net.common
    supported = support(net.hierarchy, schedule.B, cp.r2)
    out = []
    for c in relevant:
        lvl = net.hierarchy.level_of(c)
        if lvl < 1 or c not in supported:
            continue
        m1 = net.class1_count[c]
        for t in range(1, horizon + 1):
            pot = pot_out.get((c, t))
            if pot is None:
                continue
            met = pot >= np.float32(net.tau_ceil)
            if t >= 2 * lvl - 1 and not met[:m1].all():
                out.append(f"class1 of {c}: threshold unmet at t={t} (expected from {2*lvl-1})")
            if t >= 2 * lvl and not met[m1:].all():
                out.append(f"class2 of {c}: threshold unmet at t={t} (expected from {2*lvl})")
    return out


VERDICT_RECOGNIZED = "Recognized"
VERDICT_NOT_RECOGNIZED = "NotRecognized"
VERDICT_MUST_NOT_FIRE_VIOLATED = "MustNotFire-Violated"
VERDICT_UNCONSTRAINED = "Unconstrained"


def verdict(outcome: RecognitionOutcome, cp=None) -> str:
    """Three-way classification plus the definitional gap.

    supported: recognized iff the firing floor was met at the checked times;
    below r1: any target firing at the checked times violates non-firing;
    between r1 and r2: the definitions impose nothing.
    """
    if outcome.support_status == "gap":
        return VERDICT_UNCONSTRAINED
    if outcome.support_status == "supported":
        return VERDICT_RECOGNIZED if np.asarray(outcome.recognized).all() else VERDICT_NOT_RECOGNIZED
    fired = np.asarray(outcome.checked_fired)
    return VERDICT_MUST_NOT_FIRE_VIOLATED if fired.any() else VERDICT_NOT_RECOGNIZED
