"""Learning procedures that grow the three representations bottom-up.

All four algorithms share a skeleton: present the leaves of the concept being
learned, let the already-learned part of the network cascade (failure-free),
rank the layer's unlabeled neurons by incoming potential, select winners with
an m-winner-take-all, and finalize the winners' incoming weights to exact 0/1
in one shot (an incremental Oja demonstration path is available behind
`use_oja`; it runs the rule and then snaps to the same endpoints).

ff_high            full wiring at a small weight, selection threshold k*m.
ff_low             Bernoulli(p') wiring, threshold a*k*m, in-degree audits
                   against the per-child quota a*m and the total quota b*k*m.
lateral_multistep  repeated re-selection with Hebbian reinforcement of the
                   edges that backed each new candidate set.
lateral_twophase   class-1 winners first (forward potential only), then
                   class-2 winners on forward plus class-1 peer potential.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .bounds import CommonParams, ConnectivityParams, tau_high, tau_lateral, tau_low
from .hierarchy import ConceptHierarchy
from .network import LayeredNetwork, RepAssignment
from .stats import frac, quota, wilson_interval

ALGORITHMS = ("ff_high", "ff_low", "lateral_multistep", "lateral_twophase")


class StarvationError(RuntimeError):
    """A winner-take-all asked for more unlabeled neurons than the layer has."""


@dataclass(frozen=True)
class LearnConfig:
    algorithm: str
    p_prime: float = 1.0  # random initial wiring probability (ff_low, lateral)
    b: float | None = None  # total in-degree coefficient, in (a, 1]
    b1: float | None = None  # class-2 total coefficient, in [a1, 1]
    t_steps: int = 3  # multistep rounds
    rho: float = 0.01  # Oja learning rate (demonstration path)
    w0: float | None = None  # initial small weight, default 1/(k^l_max + 1)
    clamp_eta: float = 0.05
    hebb_beta: float = 0.1  # multiplicative reinforcement per round
    seed: int = 0
    use_oja: bool = False
    n_slots: int | None = None  # layer capacity in concepts, default hierarchy n

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not 0 <= self.p_prime <= 1:
            raise ValueError("p_prime in [0, 1] required")
        if self.t_steps < 1:
            raise ValueError("t_steps >= 1 required")
        if self.b is not None and not 0 < self.b <= 1:
            raise ValueError("b in (0, 1] required")


@dataclass
class ConceptLearnRecord:
    concept: int
    level: int
    positions: list[int]
    per_child_min: int
    total_min: int
    audits: dict = field(default_factory=dict)
    class_sizes: tuple[int, int] | None = None
    cascade_ok: bool = True


@dataclass
class LearnReport:
    algorithm: str
    target: int
    success: bool = False
    concepts: list = field(default_factory=list)
    churn: dict = field(default_factory=dict)  # concept -> per-round set difference sizes
    notes: list = field(default_factory=list)
    oja_trace: dict = field(default_factory=dict)
    checker_clauses: Counter = field(default_factory=Counter)  # failed checker clause -> count

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "target": self.target,
            "success": self.success,
            "concepts": [
                {
                    "concept": r.concept,
                    "level": r.level,
                    "positions": r.positions,
                    "per_child_min_indegree": r.per_child_min,
                    "total_min_indegree": r.total_min,
                    "audits": r.audits,
                    "class_sizes": r.class_sizes,
                    "cascade_ok": r.cascade_ok,
                }
                for r in self.concepts
            ],
            "churn": {str(c): v for c, v in self.churn.items()},
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# winner take all
# ---------------------------------------------------------------------------


def m_wta(potentials: np.ndarray, available_ids: np.ndarray, count: int) -> np.ndarray:
    """The `count` highest-potential available neurons, ties to lowest index."""
    potentials = np.asarray(potentials, dtype=np.float64)
    available_ids = np.asarray(available_ids)
    if potentials.shape != available_ids.shape:
        raise ValueError("potentials and available_ids must align")
    if count > available_ids.size:
        raise StarvationError(f"need {count} winners from {available_ids.size} available neurons")
    order = np.lexsort((available_ids, -potentials))
    return np.sort(available_ids[order[:count]])


# ---------------------------------------------------------------------------
# mutable view of the network during learning
# ---------------------------------------------------------------------------


class _LearnView:
    """Dense candidate weights per adjacent-layer pair plus rep labels.

    Only the rows of engaged (selected) neurons are ever written after the
    initial wiring; finalized rows are exactly 0/1.
    """

    def __init__(self, h: ConceptHierarchy, cp: CommonParams, cfg: LearnConfig, lateral: bool, target: int):
        self.h = h
        self.cp = cp
        self.cfg = cfg
        self.lateral = lateral
        self.target = target
        self.concepts = h.descendants(target)
        self.rng = np.random.default_rng(cfg.seed)
        n_slots = cfg.n_slots if cfg.n_slots is not None else h.params.n
        self.width = n_slots * cp.m
        self.n_slots = n_slots
        L = h.params.l_max
        self.w0 = cfg.w0 if cfg.w0 is not None else 1.0 / (h.params.k**L + 1)
        self.labels = [np.full(self.width, -1, dtype=np.int64) for _ in range(L + 1)]
        # level-0 reps are the environment's fixed input blocks
        self.level0 = sorted(c for c in self.concepts if h.level_of(c) == 0)
        if len(self.level0) > n_slots:
            raise StarvationError(f"{len(self.level0)} input concepts exceed {n_slots} slots")
        self.positions: dict[int, np.ndarray] = {}
        for b, c in enumerate(self.level0):
            pos = np.arange(b * cp.m, (b + 1) * cp.m, dtype=np.int64)
            self.positions[c] = pos
            self.labels[0][pos] = c
        p1 = cfg.p_prime
        self.fwd_present = [None] * (L + 1)
        self.fwd_weight = [None] * (L + 1)
        self.lat_present = [None] * (L + 1)
        self.lat_weight = [None] * (L + 1)
        for lvl in range(1, L + 1):
            if self.cfg.algorithm == "ff_high":
                present = np.ones((self.width, self.width), dtype=bool)
            else:
                present = self.rng.random((self.width, self.width)) < p1
            self.fwd_present[lvl] = present
            self.fwd_weight[lvl] = np.where(present, self.w0, 0.0)
            if lateral:
                lat = self.rng.random((self.width, self.width)) < p1
                np.fill_diagonal(lat, False)  # no self edges
                self.lat_present[lvl] = lat
                self.lat_weight[lvl] = np.where(lat, self.w0, 0.0)

    def available(self, lvl: int) -> np.ndarray:
        return np.nonzero(self.labels[lvl] == -1)[0]

    def cascade(self, concept: int, tau_learn: int) -> list[np.ndarray]:
        """Failure-free firing from presenting leaves(concept), settled.

        Continuous presentation; firing sets grow monotonically under 0/1
        finalized weights, so a fixed number of steps reaches the fixpoint.
        """
        L = self.h.params.l_max
        fired = [np.zeros(self.width, dtype=bool) for _ in range(L + 1)]
        for leaf in self.h.leaves(concept):
            fired[0][self.positions[leaf]] = True
        steps = 2 * self.h.level_of(concept) + 2 if self.lateral else self.h.level_of(concept)
        for _ in range(max(steps, 1)):
            new = [fired[0]] + [None] * L
            for lvl in range(1, L + 1):
                pot = self.fwd_weight[lvl] @ fired[lvl - 1].astype(np.float64)
                if self.lateral and self.lat_weight[lvl] is not None:
                    pot = pot + self.lat_weight[lvl] @ fired[lvl].astype(np.float64)
                # only finalized reps carry weight-1 rows; require full tau_learn
                new[lvl] = (pot >= tau_learn) & (self.labels[lvl] != -1)
            fired = new
        return fired

    def check_children_fire(self, concept: int, fired: list[np.ndarray], report: LearnReport) -> bool:
        ok = True
        for ch in self.h.children(concept):
            lvl = self.h.level_of(ch)
            if not fired[lvl][self.positions[ch]].all():
                report.notes.append(
                    f"stage {concept}: child {ch} reps not all firing under the learning threshold"
                )
                ok = False
        return ok

    def finalize(self, lvl: int, chosen: np.ndarray, fwd_sources: np.ndarray, lat_sources: np.ndarray | None):
        """One-shot endpoint: contributing in-edges to 1, everything else 0."""
        fw = self.fwd_weight[lvl]
        fw[chosen] = np.where(self.fwd_present[lvl][chosen] & fwd_sources[None, :], 1.0, 0.0)
        if self.lat_weight[lvl] is not None:
            contrib = lat_sources[None, :] if lat_sources is not None else np.zeros((1, self.width), dtype=bool)
            self.lat_weight[lvl][chosen] = np.where(self.lat_present[lvl][chosen] & contrib, 1.0, 0.0)

    def oja_demo(self, lvl: int, chosen: np.ndarray, x: np.ndarray, report: LearnReport, concept: int):
        """Run the incremental rule for t_steps before snapping; records the
        weight-norm trajectory so the path is observable."""
        from .network import oja_update

        xs = x.astype(np.float64)
        norms = []
        for v in chosen[: min(4, chosen.size)]:
            w = self.fwd_weight[lvl][v].copy()
            for _ in range(self.cfg.t_steps):
                w = oja_update(w, xs, self.cfg.rho)
            norms.append(float(np.linalg.norm(w)))
        report.oja_trace[concept] = norms

    def assemble(self, kind: str, conn: ConnectivityParams | None, class1: dict[int, int] | None) -> LayeredNetwork:
        from .network import clamp_learned_weights

        cp = self.cp
        reps = RepAssignment(self.h, self.concepts, cp.m, self.n_slots, dict(self.positions))
        inc = {}
        eta = self.cfg.clamp_eta
        for c in self.concepts:
            lvl = self.h.level_of(c)
            if lvl == 0:
                continue
            rows = self.positions[c]
            # finalized rows must be exact 0/1; the snap gate rejects drift
            for ch in self.h.children(c):
                cols = self.positions[ch]
                inc[(c, ch)] = clamp_learned_weights(self.fwd_weight[lvl][np.ix_(rows, cols)], eta) == 1.0
            if self.lateral and self.lat_weight[lvl] is not None:
                lat_bits = clamp_learned_weights(self.lat_weight[lvl][np.ix_(rows, rows)], eta) == 1.0
                if lat_bits.any():
                    inc[(c, c)] = lat_bits
        if kind == "high_ff":
            tau = tau_high(cp)
        elif kind == "low_ff":
            tau = tau_low(cp, conn.a)
        else:
            tau = tau_lateral(cp, conn.a)
        return LayeredNetwork(
            kind, self.h, cp, reps, inc, tau, conn=conn, class1_count=class1,
            edge_mode="learned", seed=self.cfg.seed,
        )


# ---------------------------------------------------------------------------
# the four algorithms
# ---------------------------------------------------------------------------


def _stage_order(h: ConceptHierarchy, target: int) -> list[int]:
    return sorted(
        (c for c in h.descendants(target) if h.level_of(c) >= 1),
        key=lambda c: (h.level_of(c), c),
    )


def _forward_potential(view: _LearnView, lvl: int, fired_below: np.ndarray) -> np.ndarray:
    return view.fwd_weight[lvl] @ fired_below.astype(np.float64)


def _audit_stage(view, concept, lvl, chosen, fired_below, conn, cfg, record):
    """In-degree audits of the finalized rows against the connectivity quotas."""
    cp = view.cp
    per_child = []
    for ch in view.h.children(concept):
        cols = view.positions[ch]
        per_child.append((view.fwd_weight[lvl][np.ix_(chosen, cols)] == 1.0).sum(axis=1))
    per_child = np.stack(per_child)  # [k, m]
    totals = per_child.sum(axis=0)
    record.per_child_min = int(per_child.min())
    record.total_min = int(totals.min())
    if conn is not None:
        record.audits["per_child_ge_am"] = bool((per_child >= float(frac(conn.a) * cp.m)).all())
        if cfg.b is not None:
            record.audits["total_ge_bkm"] = bool((totals >= quota(cfg.b, cp.k * cp.m)).all())


def learn_ff_high(
    h: ConceptHierarchy, cp: CommonParams, config: LearnConfig, target: int | None = None
) -> tuple[LayeredNetwork, LearnReport]:
    """Fully wired learning: threshold k*m, winners by incoming potential,
    one-shot weight endpoint.  The result matches the constructed network up
    to a relabeling of rep positions."""
    if target is None:
        target = h.top_concepts[0]
    view = _LearnView(h, cp, config, lateral=False, target=target)
    report = LearnReport(config.algorithm, target)
    tau_learn = cp.k * cp.m
    for concept in _stage_order(h, target):
        lvl = h.level_of(concept)
        fired = view.cascade(concept, tau_learn)
        rec = ConceptLearnRecord(concept, lvl, [], 0, 0)
        rec.cascade_ok = view.check_children_fire(concept, fired, report)
        avail = view.available(lvl)
        pot = _forward_potential(view, lvl, fired[lvl - 1])
        chosen = m_wta(pot[avail], avail, cp.m)
        if config.use_oja:
            view.oja_demo(lvl, chosen, fired[lvl - 1], report, concept)
        view.finalize(lvl, chosen, fired[lvl - 1], None)
        view.labels[lvl][chosen] = concept
        view.positions[concept] = chosen
        rec.positions = chosen.tolist()
        _audit_stage(view, concept, lvl, chosen, fired[lvl - 1], None, config, rec)
        report.concepts.append(rec)
    net = view.assemble("high_ff", None, None)
    report.success = all(
        net.inc[key].all() for key in net.inc
    ) and all(r.cascade_ok for r in report.concepts)
    return net, report


def learn_ff_low(
    h: ConceptHierarchy,
    cp: CommonParams,
    conn: ConnectivityParams,
    config: LearnConfig,
    target: int | None = None,
) -> tuple[LayeredNetwork, LearnReport]:
    """Random-wiring learning: threshold a*k*m; winners raise their present
    in-edges from child reps to 1 and zero the rest.  Success is probabilistic
    and reported, never raised: the audits record whether every (rep, child)
    pair reached a*m and every total reached b*k*m."""
    if target is None:
        target = h.top_concepts[0]
    view = _LearnView(h, cp, config, lateral=False, target=target)
    report = LearnReport(config.algorithm, target)
    tau_learn = quota(conn.a, cp.k * cp.m)
    for concept in _stage_order(h, target):
        lvl = h.level_of(concept)
        fired = view.cascade(concept, tau_learn)
        rec = ConceptLearnRecord(concept, lvl, [], 0, 0)
        rec.cascade_ok = view.check_children_fire(concept, fired, report)
        avail = view.available(lvl)
        pot = _forward_potential(view, lvl, fired[lvl - 1])
        chosen = m_wta(pot[avail], avail, cp.m)
        if config.use_oja:
            view.oja_demo(lvl, chosen, fired[lvl - 1], report, concept)
        view.finalize(lvl, chosen, fired[lvl - 1], None)
        view.labels[lvl][chosen] = concept
        view.positions[concept] = chosen
        rec.positions = chosen.tolist()
        _audit_stage(view, concept, lvl, chosen, fired[lvl - 1], conn, config, rec)
        report.concepts.append(rec)
    net = view.assemble("low_ff", conn, None)
    from .representation import check_low_connectivity

    checker = check_low_connectivity(net, conn.a)
    report.checker_clauses = Counter({"low-connectivity": len(checker.bad_pairs)} if checker.bad_pairs else {})
    report.success = checker.ok and all(r.cascade_ok for r in report.concepts)
    return net, report


def learn_lateral_multistep(
    h: ConceptHierarchy,
    cp: CommonParams,
    conn: ConnectivityParams,
    config: LearnConfig,
    target: int | None = None,
) -> tuple[LayeredNetwork, LearnReport]:
    """Assembly-style multi-round selection with lateral reinforcement.

    Round 1 selects on child potential alone; each later round lets the
    current candidates fire, re-selects on combined child + candidate
    potential, multiplies contributing weights by (1 + beta) and renormalizes
    each new candidate's in-weights to their pre-round sum.  After t_steps the
    final candidates' contributing edges snap to 0/1."""
    if target is None:
        target = h.top_concepts[0]
    conn.require_lateral(cp.k, cp.m)
    view = _LearnView(h, cp, config, lateral=True, target=target)
    report = LearnReport(config.algorithm, target)
    tau_learn = quota(conn.a, cp.k * cp.m)
    beta = config.hebb_beta
    for concept in _stage_order(h, target):
        lvl = h.level_of(concept)
        fired = view.cascade(concept, tau_learn)
        rec = ConceptLearnRecord(concept, lvl, [], 0, 0)
        rec.cascade_ok = view.check_children_fire(concept, fired, report)
        below = fired[lvl - 1]
        avail = view.available(lvl)
        pot = _forward_potential(view, lvl, below)
        candidates = m_wta(pot[avail], avail, cp.m)
        churn = []
        for _ in range(1, config.t_steps):
            cand_vec = np.zeros(view.width, dtype=bool)
            cand_vec[candidates] = True
            pot = _forward_potential(view, lvl, below) + view.lat_weight[lvl] @ cand_vec.astype(np.float64)
            new_candidates = m_wta(pot[avail], avail, cp.m)
            churn.append(int(np.setdiff1d(new_candidates, candidates).size))
            fw, lw = view.fwd_weight[lvl], view.lat_weight[lvl]
            pre = fw[new_candidates].sum(axis=1) + lw[new_candidates].sum(axis=1)
            fw[new_candidates] *= np.where(view.fwd_present[lvl][new_candidates] & below[None, :], 1 + beta, 1.0)
            lw[new_candidates] *= np.where(view.lat_present[lvl][new_candidates] & cand_vec[None, :], 1 + beta, 1.0)
            post = fw[new_candidates].sum(axis=1) + lw[new_candidates].sum(axis=1)
            scale = np.where(post > 0, pre / np.where(post > 0, post, 1.0), 1.0)
            fw[new_candidates] *= scale[:, None]
            lw[new_candidates] *= scale[:, None]
            candidates = new_candidates
        if churn and churn[-1] > 0:
            report.notes.append(f"stage {concept}: candidate churn {churn[-1]} at final round")
        cand_vec = np.zeros(view.width, dtype=bool)
        cand_vec[candidates] = True
        view.finalize(lvl, candidates, below, cand_vec)
        view.labels[lvl][candidates] = concept
        view.positions[concept] = candidates
        rec.positions = candidates.tolist()
        _audit_stage(view, concept, lvl, candidates, below, conn, config, rec)
        report.concepts.append(rec)
        report.churn[concept] = churn
    net = view.assemble("lateral", conn, None)
    from .representation import check_class_assumption

    checker = check_class_assumption(net)
    report.checker_clauses = Counter(clause for (_, _, clause, _) in checker.violations)
    report.success = checker.ok and all(r.cascade_ok for r in report.concepts)
    return net, report


def learn_lateral_twophase(
    h: ConceptHierarchy,
    cp: CommonParams,
    conn: ConnectivityParams,
    config: LearnConfig,
    target: int | None = None,
) -> tuple[LayeredNetwork, LearnReport]:
    """Two-phase lateral learning: class-1 winners on forward potential, then
    class-2 winners on forward plus class-1 peer potential.  Candidate sets
    never change within a phase, so churn is identically zero."""
    if target is None:
        target = h.top_concepts[0]
    conn.require_lateral(cp.k, cp.m)
    b = config.b if config.b is not None else conn.a
    view = _LearnView(h, cp, config, lateral=True, target=target)
    report = LearnReport(config.algorithm, target)
    tau_learn = quota(b, cp.k * cp.m)
    m1, m2 = conn.m1, conn.m2
    class1_count: dict[int, int] = {}
    for concept in _stage_order(h, target):
        lvl = h.level_of(concept)
        fired = view.cascade(concept, tau_learn)
        rec = ConceptLearnRecord(concept, lvl, [], 0, 0, class_sizes=(m1, m2))
        rec.cascade_ok = view.check_children_fire(concept, fired, report)
        below = fired[lvl - 1]
        # phase 1: class-1 winners on forward potential only
        avail = view.available(lvl)
        pot = _forward_potential(view, lvl, below)
        class1 = m_wta(pot[avail], avail, m1)
        view.finalize(lvl, class1, below, None)
        view.labels[lvl][class1] = concept
        # phase 2: children and class-1 reps fire; class-2 winners on the sum
        class1_vec = np.zeros(view.width, dtype=bool)
        class1_vec[class1] = True
        avail = view.available(lvl)
        if m2 > 0:
            pot = _forward_potential(view, lvl, below) + view.lat_weight[lvl] @ class1_vec.astype(np.float64)
            class2 = m_wta(pot[avail], avail, m2)
            view.finalize(lvl, class2, below, class1_vec)
            view.labels[lvl][class2] = concept
        else:
            class2 = np.zeros(0, dtype=np.int64)
        positions = np.concatenate([class1, class2])  # class-1-first ordering
        view.positions[concept] = positions
        class1_count[concept] = m1
        rec.positions = positions.tolist()
        # class-blind quota audit would mix the two classes; use the split one
        _audit_stage(view, concept, lvl, positions, below, None, config, rec)
        _audit_twophase(view, concept, lvl, class1, class2, conn, config, rec)
        report.concepts.append(rec)
        report.churn[concept] = [0] * max(config.t_steps - 1, 0)
    net = view.assemble("lateral", conn, class1_count)
    from .representation import check_class_assumption

    checker = check_class_assumption(net)
    report.checker_clauses = Counter(clause for (_, _, clause, _) in checker.violations)
    report.success = checker.ok and all(r.cascade_ok for r in report.concepts)
    return net, report


def _audit_twophase(view, concept, lvl, class1, class2, conn, config, rec):
    cp = view.cp
    m = cp.m
    kids = list(view.h.children(concept))
    counts1 = np.stack([
        (view.fwd_weight[lvl][np.ix_(class1, view.positions[ch])] == 1.0).sum(axis=1) for ch in kids
    ])
    rec.audits["class1_per_child_ge_am"] = bool((counts1 >= float(frac(conn.a) * m)).all())
    if class2.size:
        counts2 = np.stack([
            (view.fwd_weight[lvl][np.ix_(class2, view.positions[ch])] == 1.0).sum(axis=1) for ch in kids
        ])
        rec.audits["class2_per_child_ge_a1m"] = bool((counts2 >= float(frac(conn.a1) * m)).all())
        lat = (view.lat_weight[lvl][np.ix_(class2, class1)] == 1.0).sum(axis=1)
        rec.audits["class2_peer_ge_a2m"] = bool((lat >= float(frac(conn.a2) * m)).all())
        if config.b1 is not None:
            rec.audits["class2_total_ge_b1km"] = bool(
                (counts2.sum(axis=0) >= quota(config.b1, cp.k * m)).all()
            )


def learn(h, cp, conn, config: LearnConfig, target=None):
    """Dispatch on config.algorithm."""
    if config.algorithm == "ff_high":
        return learn_ff_high(h, cp, config, target)
    if config.algorithm == "ff_low":
        return learn_ff_low(h, cp, conn, config, target)
    if config.algorithm == "lateral_multistep":
        return learn_lateral_multistep(h, cp, conn, config, target)
    return learn_lateral_twophase(h, cp, conn, config, target)


# ---------------------------------------------------------------------------
# constraint estimators and success-rate sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: float
    ci_lo: float
    ci_hi: float
    trials: int


def constraint1_estimate(k: int, m: int, n: int, p_prime: float, b: float, trials: int, seed: int = 0) -> Estimate:
    """Monte Carlo probability that a layer of n*m neurons contains at least m
    neurons with >= ceil(b*k*m) random in-edges from a fixed k*m-neuron set."""
    if not 0 < b <= 1:
        raise ValueError("b in (0, 1] required (b*k*m cannot exceed k*m)")
    if trials < 1:
        raise ValueError("trials >= 1 required")
    rng = np.random.default_rng(seed)
    need = quota(b, k * m)
    hits = 0
    chunk = max(1, min(trials, 10**7 // max(n * m, 1)))
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        degrees = rng.binomial(k * m, p_prime, size=(t, n * m))
        hits += int(((degrees >= need).sum(axis=1) >= m).sum())
        done += t
    lo, hi = wilson_interval(hits, trials)
    return Estimate(hits / trials, lo, hi, trials)


@dataclass(frozen=True)
class RatioEstimate:
    ratio: float
    stderr: float
    p_a: float
    p_b: float
    trials: int


def constraint2_estimate(k: int, m: int, p_prime: float, a: float, b: float, trials: int, seed: int = 0) -> RatioEstimate:
    """Monte Carlo estimate of the same Pr(A)/Pr(B) ratio as the analytic
    audit quantity, from independent sample sets for A and B; the standard
    error comes from the delta method on the independent ratio."""
    if frac(a) > frac(b):
        raise ValueError("a <= b required")
    rng = np.random.default_rng(seed)
    t_a = quota(a, m)
    t_b = quota(b, k * m)
    groups = rng.binomial(m, p_prime, size=(trials, k))
    a_hits = int((groups >= t_a).all(axis=1).sum())
    totals = rng.binomial(k * m, p_prime, size=trials)
    b_hits = int((totals >= t_b).sum())
    if b_hits == 0:
        raise ValueError("no samples satisfied the total-degree event; ratio undefined")
    p_a, p_b = a_hits / trials, b_hits / trials
    ratio = p_a / p_b
    var = 0.0
    if a_hits:
        var += (1 - p_a) / (trials * p_a)
    var += (1 - p_b) / (trials * p_b)
    return RatioEstimate(ratio, ratio * math.sqrt(var), p_a, p_b, trials)


@dataclass
class ThetaEstimate:
    """Empirical representation-failure rate over seeds, with Wilson CI."""

    failure_rate: float
    ci_lo: float
    ci_hi: float
    seeds: int
    failures: int
    failure_notes: Counter

    def summary(self) -> str:
        return (
            f"theta_hat = {self.failure_rate:.4f} "
            f"[{self.ci_lo:.4f}, {self.ci_hi:.4f}] over {self.seeds} seeds"
        )


def estimate_theta(run_one, seeds: int, base_seed: int = 0) -> ThetaEstimate:
    """Run a learner across seeds and report the fraction of runs whose final
    network fails its representation checker.  `run_one(seed)` must return a
    LearnReport."""
    failures = 0
    notes: Counter = Counter()
    for i in range(seeds):
        report = run_one(base_seed + i)
        if not report.success:
            failures += 1
            notes.update(report.checker_clauses)
            for rec in report.concepts:
                for name, ok in rec.audits.items():
                    if not ok:
                        notes[name] += 1
    lo, hi = wilson_interval(failures, seeds)
    return ThetaEstimate(failures / seeds, lo, hi, seeds, failures, notes)
