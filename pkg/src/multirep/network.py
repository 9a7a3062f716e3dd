"""Layered threshold-network substrate.

Neurons live in layers of n*m slots each.  Only representative neurons carry
weight-1 incoming edges; everything else has all-zero weights and is inert
(it can only fire in the degenerate tau <= 0 regime, and even then feeds
nothing).  Incidence is stored as one m x m bit matrix per (concept, source
group), indexed by rep order on both sides, so a time step is a handful of
small matrix products regardless of layer width.

Firing state and failure masks carry a trailing trial axis: a single run is
simply a batch of one.  Networks are immutable after construction and shared
across parallel trial workers; states and masks are per-trial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bounds import CommonParams, ConnectivityParams
from .hierarchy import ConceptHierarchy
from .stats import ceil_frac, frac


class NonConvergedWeightsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# rep bookkeeping
# ---------------------------------------------------------------------------


class RepAssignment:
    """Maps each included concept to its m representative neurons.

    State arrays index reps canonically: the reps of the b-th included concept
    of a level occupy rows [b*m, (b+1)*m).  `positions[c]` records the actual
    neuron indices inside the physical layer (contiguous blocks for built
    networks, arbitrary winner sets for learned ones).
    """

    def __init__(
        self,
        hierarchy: ConceptHierarchy,
        concepts: list[int],
        m: int,
        layer_concepts: int,
        positions: dict[int, np.ndarray] | None = None,
    ):
        self.hierarchy = hierarchy
        self.m = m
        self.layer_concepts = layer_concepts  # capacity of each layer, in concepts
        self.layer_width = layer_concepts * m
        self.levels: list[list[int]] = [[] for _ in range(hierarchy.params.l_max + 1)]
        for c in sorted(concepts):
            self.levels[hierarchy.level_of(c)].append(c)
        self.block = {c: b for lvl in self.levels for b, c in enumerate(lvl)}
        if positions is None:
            positions = {
                c: np.arange(self.block[c] * m, (self.block[c] + 1) * m, dtype=np.int64)
                for lvl in self.levels
                for c in lvl
            }
        self.positions = positions
        for c, pos in self.positions.items():
            if len(pos) != m or len(set(pos.tolist())) != m:
                raise ValueError(f"concept {c}: rep set must hold exactly {m} distinct neurons")
            if pos.max() >= self.layer_width:
                raise ValueError(f"concept {c}: rep position beyond layer width {self.layer_width}")
        self.concepts = sorted(concepts)

    def rows(self, c: int) -> slice:
        b = self.block[c]
        return slice(b * self.m, (b + 1) * self.m)

    def n_rows(self, level: int) -> int:
        return len(self.levels[level]) * self.m

    def concept_of(self, layer: int, index: int) -> tuple[int, int] | None:
        """(concept, offset) owning a physical neuron index, if any."""
        for c in self.levels[layer]:
            hit = np.nonzero(self.positions[c] == index)[0]
            if hit.size:
                return c, int(hit[0])
        return None


# ---------------------------------------------------------------------------
# per-trial state
# ---------------------------------------------------------------------------


class FailureMask:
    """Per-neuron survival bits, one full layer per array, shape [width, T].

    Sampled once per trial; immutable afterwards.  A failed neuron never fires.
    """

    def __init__(self, layers: list[np.ndarray]):
        self.layers = [np.asarray(a, dtype=bool) for a in layers]
        if any(a.ndim != 2 for a in self.layers):
            raise ValueError("mask layers must be [width, trials] arrays")

    @property
    def trials(self) -> int:
        return self.layers[0].shape[1]

    @classmethod
    def all_surviving(cls, net: "LayeredNetwork", trials: int = 1) -> "FailureMask":
        return cls([np.ones((net.reps.layer_width, trials), dtype=bool) for _ in net.levels_range()])

    def rep_block(self, net: "LayeredNetwork", c: int) -> np.ndarray:
        lvl = net.hierarchy.level_of(c)
        return self.layers[lvl][net.reps.positions[c], :]

    def rep_rows(self, net: "LayeredNetwork", level: int) -> np.ndarray:
        """Survival bits for all rep rows of a level, canonical order."""
        idx = np.concatenate([net.reps.positions[c] for c in net.reps.levels[level]]) if net.reps.levels[level] else np.zeros(0, dtype=np.int64)
        return self.layers[level][idx, :]

    def all_relevant_survive(self, net: "LayeredNetwork", concepts: list[int]) -> np.ndarray:
        """Per-trial flag: every rep of every listed concept survives."""
        ok = np.ones(self.trials, dtype=bool)
        for c in concepts:
            ok &= self.rep_block(net, c).all(axis=0)
        return ok


class FiringState:
    """Bit vectors of currently-firing rep rows per layer, shape [rows, T]."""

    def __init__(self, layers: list[np.ndarray], t: int = 0):
        self.layers = layers
        self.t = t

    @classmethod
    def zeros(cls, net: "LayeredNetwork", trials: int = 1) -> "FiringState":
        return cls(
            [np.zeros((net.reps.n_rows(lvl), trials), dtype=bool) for lvl in net.levels_range()],
            t=0,
        )

    def block(self, net: "LayeredNetwork", c: int) -> np.ndarray:
        return self.layers[net.hierarchy.level_of(c)][net.reps.rows(c), :]


# ---------------------------------------------------------------------------
# the network
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class LayeredNetwork:
    """Frozen built representation: rep assignment plus 0/1 incidence sets.

    kind is one of high_ff / low_ff / lateral; the first two are feed-forward.
    tau is the recognition threshold; tau_ceil is the smallest integer count
    that meets it, used for all firing comparisons (potentials are integer
    counts because weights are 0/1).
    """

    kind: str
    hierarchy: ConceptHierarchy
    common: CommonParams
    reps: RepAssignment
    inc: dict[tuple[int, int], np.ndarray]
    tau: float
    conn: ConnectivityParams | None = None
    class1_count: dict[int, int] | None = None
    edge_mode: str | None = None
    seed: int | None = None

    def __post_init__(self):
        self.tau_ceil = ceil_frac(frac(self.tau))
        self._wf: dict[int, np.ndarray] = {}
        self._wl: dict[int, np.ndarray] = {}
        self._child_row_start: dict[int, int] = {}
        for lvl in range(1, self.hierarchy.params.l_max + 1):
            for c in self.reps.levels[lvl]:
                kids = list(self.hierarchy.children(c))
                missing = [k for k in kids if k not in self.reps.block]
                if missing:
                    raise ValueError(f"concept {c}: children {missing} not represented in network")
                blocks = [self.reps.block[k] for k in kids]
                if blocks != list(range(blocks[0], blocks[0] + len(kids))):
                    raise ValueError(f"concept {c}: child rep blocks must be contiguous")
                self._child_row_start[c] = blocks[0] * self.reps.m

    @property
    def topology(self) -> str:
        return "lateral" if self.kind == "lateral" else "feed_forward"

    def levels_range(self) -> range:
        return range(self.hierarchy.params.l_max + 1)

    def fwd_matrix(self, c: int) -> np.ndarray:
        """float32 [m, k*m] weight matrix over the concept's children, id order."""
        if c not in self._wf:
            kids = list(self.hierarchy.children(c))
            self._wf[c] = np.concatenate(
                [self.inc[(c, ch)].astype(np.float32) for ch in kids], axis=1
            )
        return self._wf[c]

    def lat_matrix(self, c: int) -> np.ndarray | None:
        if (c, c) not in self.inc:
            return None
        if c not in self._wl:
            self._wl[c] = self.inc[(c, c)].astype(np.float32)
        return self._wl[c]

    # -- dynamics -----------------------------------------------------------

    def concept_potentials(self, c: int, state: FiringState) -> np.ndarray:
        """Integer potentials of c's reps from the state snapshot, [m, T]."""
        lvl = self.hierarchy.level_of(c)
        start = self._child_row_start[c]
        below = state.layers[lvl - 1][start : start + self.hierarchy.params.k * self.reps.m, :]
        pot = self.fwd_matrix(c) @ below.astype(np.float32)
        wl = self.lat_matrix(c)
        if wl is not None:
            pot += wl @ state.block(self, c).astype(np.float32)
        return pot

    def potential(self, v: tuple[int, int], state: FiringState) -> int | np.ndarray:
        """Potential of one neuron (layer, index).  Non-rep neurons and input
        neurons have all-zero incoming weights, hence potential 0."""
        layer, index = v
        if layer == 0:
            out = np.zeros(state.layers[0].shape[1], dtype=np.int64)
            return int(out[0]) if out.size == 1 else out
        owner = self.reps.concept_of(layer, index)
        if owner is None:
            zero = np.zeros(state.layers[0].shape[1], dtype=np.int64)
            return int(zero[0]) if zero.size == 1 else zero
        c, offset = owner
        pot = np.rint(self.concept_potentials(c, state)[offset]).astype(np.int64)
        return int(pot[0]) if pot.size == 1 else pot

    def step(self, state: FiringState, mask: FailureMask, pot_out: dict | None = None) -> FiringState:
        """One synchronous step: every surviving rep at layers >= 1 fires iff
        its potential from the time-t snapshot meets tau; failed neurons stay
        silent.  Layer-0 bits of the new state are zero (presenter's job)."""
        new_layers = [np.zeros_like(a) for a in state.layers]
        for lvl in range(1, self.hierarchy.params.l_max + 1):
            for c in self.reps.levels[lvl]:
                pot = self.concept_potentials(c, state)
                if pot_out is not None:
                    pot_out[(c, state.t + 1)] = pot
                fire = pot >= np.float32(self.tau_ceil)
                fire &= mask.rep_block(self, c)
                new_layers[lvl][self.reps.rows(c), :] = fire
        return FiringState(new_layers, t=state.t + 1)

    # -- export ---------------------------------------------------------------

    def summary_json(self) -> dict:
        pairs = {}
        for (c, src), bits in sorted(self.inc.items()):
            counts = bits.sum(axis=1)
            pairs[f"{c}<-{src}"] = {
                "min": int(counts.min()),
                "max": int(counts.max()),
                "total": int(counts.sum()),
            }
        return {
            "kind": self.kind,
            "topology": self.topology,
            "tau": self.tau,
            "tau_ceil": self.tau_ceil,
            "m": self.reps.m,
            "layer_width": self.reps.layer_width,
            "concepts": {
                str(c): {
                    "level": self.hierarchy.level_of(c),
                    "reps": self.reps.positions[c].tolist(),
                }
                for c in self.reps.concepts
            },
            "class1_count": {str(c): v for c, v in (self.class1_count or {}).items()},
            "incidence_cardinalities": pairs,
        }

    def export_incidence(self, path: str) -> None:
        """Binary sidecar: for each (concept, group) pair in sorted order, m
        rows of ceil(m/8) bytes, bits packed little-endian within each row.
        An index JSON describing the order is written next to it."""
        order = sorted(self.inc.keys())
        with open(path, "wb") as f:
            for key in order:
                packed = np.packbits(self.inc[key].astype(np.uint8), axis=1, bitorder="little")
                f.write(packed.tobytes())
        idx = {
            "m": self.reps.m,
            "row_bytes": (self.reps.m + 7) // 8,
            "pairs": [{"concept": c, "source": s} for c, s in order],
        }
        with open(path + ".index.json", "w") as f:
            json.dump(idx, f, indent=1)


# ---------------------------------------------------------------------------
# plasticity primitives (used by the learning module's mutable views)
# ---------------------------------------------------------------------------


def oja_update(weights: np.ndarray, firing: np.ndarray, rho: float) -> np.ndarray:
    """One Oja-rule step: w' = w + rho * pot * (x - pot * w), pot = w . x."""
    if weights.shape != firing.shape:
        raise ValueError("weights and firing vectors must have equal length")
    if rho <= 0:
        raise ValueError("rho > 0 required")
    w = np.asarray(weights, dtype=np.float64)
    x = np.asarray(firing, dtype=np.float64)
    pot = float(w @ x)
    return w + rho * pot * (x - pot * w)


def clamp_learned_weights(weights: np.ndarray, eta: float = 0.05) -> np.ndarray:
    """Snap weights within eta of 0 or 1 to exactly 0/1; anything in the open
    middle gap means learning did not converge and is rejected."""
    w = np.asarray(weights, dtype=np.float64)
    near0 = np.abs(w) <= eta
    near1 = np.abs(w - 1.0) <= eta
    bad = ~(near0 | near1)
    if bad.any():
        i = int(np.argmax(bad.reshape(-1)))
        raise NonConvergedWeightsError(
            f"non-converged weight {w.reshape(-1)[i]:.4f} outside [0,{eta}] u [{1-eta},1]"
        )
    return near1.astype(np.float64)
