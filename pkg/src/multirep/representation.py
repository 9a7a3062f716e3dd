"""Builders for the three concrete representations, plus structural checkers.

high_ff: every (rep, child) incidence set is all m bits.
low_ff:  every (rep, child) set holds at least ceil(a*m) bits.
lateral: reps split into class 1 (per-child quota a) and class 2 (per-child
         quota a1, plus a peer quota a2 drawn from class-1 positions).

Two sampling modes: exact-quota draws exactly the quota per set (isolates
recognition behavior from wiring randomness); bernoulli draws each bit with
probability p' and redraws sets that miss their quota, up to a retry cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import CommonParams, ConnectivityParams, tau_high, tau_low, tau_lateral
from .hierarchy import ConceptHierarchy
from .network import LayeredNetwork, RepAssignment
from .stats import frac, quota


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class ReprSpec:
    """Which representation to build and how to sample its wiring."""

    kind: str  # high_ff | low_ff | lateral
    edge_mode: str = "exact-quota"  # exact-quota | bernoulli
    p_prime: float | None = None  # bernoulli bit probability
    seed: int = 0
    max_attempts: int = 100

    def __post_init__(self):
        if self.kind not in ("high_ff", "low_ff", "lateral"):
            raise ValueError(f"unknown representation kind {self.kind!r}")
        if self.edge_mode not in ("exact-quota", "bernoulli"):
            raise ValueError(f"unknown edge mode {self.edge_mode!r}")
        if self.edge_mode == "bernoulli" and self.p_prime is None:
            raise ValueError("bernoulli mode needs p_prime")


def _included_concepts(h: ConceptHierarchy, target: int | None, scope: str) -> list[int]:
    if scope == "forest":
        return list(range(h.total_concepts))
    if scope == "subtree":
        if target is None:
            raise ValueError("subtree scope needs a target concept")
        return h.descendants(target)
    raise ValueError(f"unknown scope {scope!r}")


def _rep_assignment(h: ConceptHierarchy, cp: CommonParams, target, scope, layer_concepts=None):
    concepts = _included_concepts(h, target, scope)
    if layer_concepts is None:
        # every layer holds n*m neurons; rep blocks occupy a prefix of each
        layer_concepts = h.params.n
    return RepAssignment(h, concepts, cp.m, layer_concepts)


def _exact_rows(rng: np.random.Generator, rows: int, cols: int, q: int) -> np.ndarray:
    """Bool [rows, cols] where each row has exactly q bits set, uniformly."""
    out = np.zeros((rows, cols), dtype=bool)
    if q <= 0:
        return out
    if q > cols:
        raise BuildError(f"quota {q} exceeds group size {cols}")
    u = rng.random((rows, cols))
    pick = np.argpartition(u, q - 1, axis=1)[:, :q]
    np.put_along_axis(out, pick, True, axis=1)
    return out


def _bernoulli_rows(
    rng: np.random.Generator,
    rows: int,
    cols: int,
    p_prime: float,
    min_bits: int,
    max_attempts: int,
    rejections: list,
    tag: str,
) -> np.ndarray:
    out = rng.random((rows, cols)) < p_prime
    for _ in range(max_attempts):
        short = out.sum(axis=1) < min_bits
        if not short.any():
            return out
        rejections.append((tag, int(short.sum())))
        out[short] = rng.random((int(short.sum()), cols)) < p_prime
    raise BuildError(
        f"{tag}: could not reach quota {min_bits} bits at p'={p_prime} "
        f"after {max_attempts} redraws"
    )


def _forward_rows(rng, spec: ReprSpec, rows, m, min_bits, rejections, tag):
    if spec.edge_mode == "exact-quota":
        return _exact_rows(rng, rows, m, min_bits)
    return _bernoulli_rows(rng, rows, m, spec.p_prime, min_bits, spec.max_attempts, rejections, tag)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_high(
    h: ConceptHierarchy,
    cp: CommonParams,
    target: int | None = None,
    scope: str = "subtree",
    layer_concepts: int | None = None,
) -> LayeredNetwork:
    """Total connectivity: all m bits set in every (rep, child) incidence set."""
    if target is None and scope == "subtree":
        target = h.top_concepts[0]
    reps = _rep_assignment(h, cp, target, scope, layer_concepts)
    inc = {}
    for lvl in range(1, h.params.l_max + 1):
        for c in reps.levels[lvl]:
            for ch in h.children(c):
                inc[(c, ch)] = np.ones((cp.m, cp.m), dtype=bool)
    return LayeredNetwork("high_ff", h, cp, reps, inc, tau_high(cp), edge_mode="exact-quota")


def build_low(
    h: ConceptHierarchy,
    cp: CommonParams,
    conn: ConnectivityParams,
    spec: ReprSpec | None = None,
    target: int | None = None,
    scope: str = "subtree",
    layer_concepts: int | None = None,
) -> LayeredNetwork:
    """Partial forward wiring: every (rep, child) set gets >= ceil(a*m) bits."""
    spec = spec or ReprSpec("low_ff")
    if target is None and scope == "subtree":
        target = h.top_concepts[0]
    reps = _rep_assignment(h, cp, target, scope, layer_concepts)
    rng = np.random.default_rng(spec.seed)
    q_a = quota(conn.a, cp.m)
    rejections: list = []
    inc = {}
    for lvl in range(1, h.params.l_max + 1):
        for c in reps.levels[lvl]:
            for ch in h.children(c):
                inc[(c, ch)] = _forward_rows(rng, spec, cp.m, cp.m, q_a, rejections, f"inc({c},{ch})")
    net = LayeredNetwork(
        "low_ff", h, cp, reps, inc, tau_low(cp, conn.a),
        conn=conn, edge_mode=spec.edge_mode, seed=spec.seed,
    )
    net.build_rejections = rejections
    return net


def build_lateral(
    h: ConceptHierarchy,
    cp: CommonParams,
    conn: ConnectivityParams,
    spec: ReprSpec | None = None,
    target: int | None = None,
    scope: str = "subtree",
    layer_concepts: int | None = None,
) -> LayeredNetwork:
    """Two-class wiring with peer edges.

    Per concept the first m1 rep positions form class 1 (per-child quota
    ceil(a*m)); the remaining m2 form class 2 (per-child quota ceil(a1*m) and
    a peer quota ceil(a2*m) drawn from class-1 positions only).
    """
    spec = spec or ReprSpec("lateral")
    conn.require_lateral(cp.k, cp.m)
    if target is None and scope == "subtree":
        target = h.top_concepts[0]
    m, m1, m2 = cp.m, conn.m1, conn.m2
    q_a = quota(conn.a, m)
    q_a1 = quota(conn.a1, m)
    q_a2 = quota(conn.a2, m)
    if m2 > 0 and q_a2 > m1:
        raise BuildError(
            f"class-2 peer quota ceil(a2*m) = {q_a2} exceeds the {m1} class-1 "
            f"positions it must be drawn from: infeasible (m={m}, m1={m1}, a2={conn.a2})"
        )
    if m2 > 0 and q_a1 >= frac(conn.a) * m and spec.edge_mode == "exact-quota":
        raise BuildError(
            f"class-2 forward quota ceil(a1*m) = {q_a1} already meets the class-1 "
            f"bound a*m = {float(conn.a) * m:g}; declared classes would not partition"
        )
    reps = _rep_assignment(h, cp, target, scope, layer_concepts)
    rng = np.random.default_rng(spec.seed)
    rejections: list = []
    inc = {}
    for lvl in range(1, h.params.l_max + 1):
        for c in reps.levels[lvl]:
            for ch in h.children(c):
                rows1 = _forward_rows(rng, spec, m1, m, q_a, rejections, f"inc({c},{ch})[class1]")
                rows2 = _forward_rows(rng, spec, m2, m, q_a1, rejections, f"inc({c},{ch})[class2]")
                inc[(c, ch)] = np.concatenate([rows1, rows2], axis=0)
            if m2 > 0:
                lat = np.zeros((m, m), dtype=bool)
                # class-2 rows draw peer edges from class-1 columns [0, m1)
                peer = _forward_rows(rng, spec, m2, m1, q_a2, rejections, f"inc({c},{c})")
                lat[m1:, :m1] = peer
                if spec.edge_mode == "bernoulli":
                    _ensure_class2_below_a(rng, spec, inc, c, h, q_a1, conn, m, m1, rejections)
                inc[(c, c)] = lat
    net = LayeredNetwork(
        "lateral", h, cp, reps, inc, tau_lateral(cp, conn.a),
        conn=conn, class1_count={c: m1 for lvl in range(1, h.params.l_max + 1) for c in reps.levels[lvl]},
        edge_mode=spec.edge_mode, seed=spec.seed,
    )
    net.build_rejections = rejections
    return net


def _ensure_class2_below_a(rng, spec, inc, c, h, q_a1, conn, m, m1, rejections):
    """Bernoulli draws can overshoot a class-2 row to class-1 cardinality on
    every child, which would break the declared partition.  Redraw such rows
    (keeping the a1 quota) until at least one child stays below a*m."""
    kids = list(h.children(c))
    a_m = frac(conn.a) * m
    for _ in range(spec.max_attempts):
        over = np.ones(m - m1, dtype=bool)
        for ch in kids:
            over &= inc[(c, ch)][m1:].sum(axis=1) >= a_m
        if not over.any():
            return
        rejections.append((f"inc({c},*)[class2-overshoot]", int(over.sum())))
        rows = np.nonzero(over)[0]
        for ch in kids:
            redraw = _bernoulli_rows(
                rng, len(rows), m, spec.p_prime, q_a1, spec.max_attempts, rejections, f"inc({c},{ch})[class2]"
            )
            inc[(c, ch)][m1 + rows] = redraw
    raise BuildError(
        f"concept {c}: class-2 rows keep reaching class-1 cardinality at p'={spec.p_prime}"
    )


# ---------------------------------------------------------------------------
# checkers
# ---------------------------------------------------------------------------


@dataclass
class ClassReport:
    """Derived class partition per concept, with any violations."""

    per_concept: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "per_concept": {
                str(c): {"class1": v[0], "class2": v[1]} for c, v in self.per_concept.items()
            },
            "violations": [
                {"concept": c, "rep": r, "clause": clause, "detail": detail}
                for (c, r, clause, detail) in self.violations
            ],
        }


def check_class_assumption(net: LayeredNetwork) -> ClassReport:
    """Re-derive the class partition from incidence cardinalities alone.

    class 1: every child group holds >= a*m bits.
    class 2: not class 1, every child group >= a1*m bits, and >= a2*m peer
             bits from derived class-1 positions.
    Passing means every rep lands in a class and the declared split matches.
    """
    if net.kind != "lateral":
        raise ValueError("not lateral kind")
    conn = net.conn
    m = net.reps.m
    a_m = frac(conn.a) * m
    a1_m = frac(conn.a1) * m
    a2_m = frac(conn.a2) * m
    report = ClassReport()
    for lvl in range(1, net.hierarchy.params.l_max + 1):
        for c in net.reps.levels[lvl]:
            kids = list(net.hierarchy.children(c))
            child_counts = np.stack([net.inc[(c, ch)].sum(axis=1) for ch in kids])  # [k, m]
            derived1 = (child_counts >= a_m).all(axis=0)
            lat = net.inc.get((c, c))
            class1_idx = np.nonzero(derived1)[0]
            derived2 = np.zeros(m, dtype=bool)
            for v in np.nonzero(~derived1)[0]:
                if (child_counts[:, v] < a1_m).any():
                    bad = kids[int(np.argmax(child_counts[:, v] < a1_m))]
                    report.violations.append(
                        (c, int(v), "a", f"inc(v,{bad}) = {int(child_counts[:, v].min())} < a1*m = {float(a1_m):g}")
                    )
                    continue
                peer = int(lat[v, class1_idx].sum()) if lat is not None else 0
                if peer < a2_m:
                    report.violations.append(
                        (c, int(v), "b", f"inc(v,{c}) n class1 = {peer} < a2*m = {float(a2_m):g}")
                    )
                    continue
                derived2[v] = True
            if net.class1_count is not None:
                # declared split is class-1-first by construction
                declared1 = net.class1_count[c]
                mismatch = np.nonzero(derived1 != (np.arange(m) < declared1))[0]
                for v in mismatch:
                    report.violations.append(
                        (c, int(v), "declared-mismatch",
                         f"declared {'class1' if v < declared1 else 'class2'} but derives "
                         f"{'class1' if derived1[v] else 'class2/none'}")
                    )
            report.per_concept[c] = (
                np.nonzero(derived1)[0].tolist(),
                np.nonzero(derived2)[0].tolist(),
            )
    return report


@dataclass
class LowConnectivityReport:
    quota: int
    bad_pairs: list  # (concept, child, rep index, count)

    @property
    def ok(self) -> bool:
        return not self.bad_pairs

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "quota": self.quota,
            "bad_pairs": [
                {"concept": c, "child": ch, "rep": v, "count": n}
                for (c, ch, v, n) in self.bad_pairs
            ],
        }


def structurally_equivalent(net_a: LayeredNetwork, net_b: LayeredNetwork) -> bool:
    """Equality up to a per-concept relabeling of rep positions.

    Incidence matrices are indexed by rep order, so two networks wire the same
    structure iff they cover the same concepts with the same m and their
    matrices agree after ordering each concept's reps canonically (they always
    do for complete matrices, which is the fully-wired case this certifies).
    """
    if net_a.reps.concepts != net_b.reps.concepts or net_a.reps.m != net_b.reps.m:
        return False
    if set(net_a.inc) != set(net_b.inc):
        return False
    for key in net_a.inc:
        a_bits, b_bits = net_a.inc[key], net_b.inc[key]
        if a_bits.all() and b_bits.all():
            continue  # complete bipartite: any relabeling matches
        if not np.array_equal(a_bits, b_bits):
            return False
    return True


def check_low_connectivity(net: LayeredNetwork, a: float) -> LowConnectivityReport:
    """List every (rep, child) incidence set holding fewer than a*m bits."""
    m = net.reps.m
    a_m = frac(a) * m
    report = LowConnectivityReport(quota=quota(a, m), bad_pairs=[])
    for (c, src), bits in sorted(net.inc.items()):
        if c == src:
            continue  # peer sets are judged by the class checker
        counts = bits.sum(axis=1)
        for v in np.nonzero(counts < a_m)[0]:
            report.bad_pairs.append((c, src, int(v), int(counts[v])))
    return report
