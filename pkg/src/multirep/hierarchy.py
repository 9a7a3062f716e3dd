"""Concept hierarchies: k-ary leveled forests plus the recursive support sets
that decide which concepts a partial input should trigger.

A hierarchy has exactly k top-level concepts at level l_max; every concept at
level >= 1 has exactly k children one level below, and child sets of distinct
same-level concepts are disjoint.  Concept ids are dense integers assigned
breadth-first and level-major (roots first, leaves last), so every experiment
is reproducible from parameters alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .stats import frac, quota

LeafSet = frozenset  # set of level-0 concept ids


@dataclass(frozen=True)
class HierarchyParams:
    """k: branching factor and number of roots; l_max: top level;
    n: size of the level-0 concept universe (>= number of leaves)."""

    k: int
    l_max: int
    n: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("invariant violated: k >= 1")
        if self.l_max < 1:
            raise ValueError("invariant violated: l_max >= 1")
        leaves = self.k ** (self.l_max + 1)
        if self.n < leaves:
            raise ValueError(
                f"invariant violated: n >= k^(l_max+1) = {leaves} (total leaves), got n={self.n}"
            )


class ConceptHierarchy:
    """Immutable k-ary forest; safe for concurrent reads.

    Level ell holds k^(l_max - ell + 1) concepts.  Ids run top-down: ids
    [0, k) are the roots at level l_max, the next k^2 ids are level l_max-1
    ordered by parent, and so on; leaves occupy the final id block.
    """

    def __init__(self, params: HierarchyParams):
        self.params = params
        k, l_max = params.k, params.l_max
        # _start[lvl] = first id at that level (levels indexed 0..l_max)
        sizes = [k ** (l_max - lvl + 1) for lvl in range(l_max + 1)]
        start = [0] * (l_max + 1)
        acc = 0
        for lvl in range(l_max, -1, -1):
            start[lvl] = acc
            acc += sizes[lvl]
        self._sizes = sizes
        self._start = start
        self.total_concepts = acc

    # -- structure queries ---------------------------------------------------

    def level_of(self, c: int) -> int:
        if not 0 <= c < self.total_concepts:
            raise KeyError(f"concept {c} not in hierarchy")
        for lvl in range(self.params.l_max, -1, -1):
            if self._start[lvl] <= c < self._start[lvl] + self._sizes[lvl]:
                return lvl
        raise AssertionError("unreachable")

    def size_at(self, level: int) -> int:
        return self._sizes[level]

    def concepts_at(self, level: int) -> range:
        return range(self._start[level], self._start[level] + self._sizes[level])

    def within_level(self, c: int) -> int:
        return c - self._start[self.level_of(c)]

    @property
    def top_concepts(self) -> range:
        return self.concepts_at(self.params.l_max)

    def children(self, c: int) -> range:
        lvl = self.level_of(c)
        if lvl == 0:
            return range(0)
        j = c - self._start[lvl]
        base = self._start[lvl - 1] + j * self.params.k
        return range(base, base + self.params.k)

    def parent(self, c: int) -> int | None:
        lvl = self.level_of(c)
        if lvl == self.params.l_max:
            return None
        j = c - self._start[lvl]
        return self._start[lvl + 1] + j // self.params.k

    def descendants(self, c: int) -> list[int]:
        """c itself plus everything below it, in breadth-first order."""
        out = [c]
        frontier = [c]
        while frontier:
            nxt: list[int] = []
            for d in frontier:
                nxt.extend(self.children(d))
            out.extend(nxt)
            frontier = nxt
        return out

    def descendant_count(self, c: int) -> int:
        k, lvl = self.params.k, self.level_of(c)
        if k == 1:
            return lvl + 1
        return (k ** (lvl + 1) - 1) // (k - 1)

    def leaves(self, c: int) -> LeafSet:
        lvl = self.level_of(c)
        j = c - self._start[lvl]
        span = self.params.k ** lvl
        base = self._start[0] + j * span
        return frozenset(range(base, base + span))

    def is_leaf(self, c: int) -> bool:
        return self.level_of(c) == 0

    def adjacency_json(self) -> list[dict]:
        return [
            {"id": c, "level": lvl, "children": list(self.children(c))}
            for lvl in range(self.params.l_max, -1, -1)
            for c in self.concepts_at(lvl)
        ]


def build_hierarchy(params: HierarchyParams) -> ConceptHierarchy:
    return ConceptHierarchy(params)


def support(h: ConceptHierarchy, B: Iterable[int], r) -> set[int]:
    """All concepts recursively having at least r*k supported children.

    Level-0 concepts are supported iff they are in B; a level-ell concept is
    supported iff at least r*k of its children are (exact rational compare,
    count >= r*k).  Returned as the union over all levels.
    """
    rk = frac(r) * h.params.k
    leaves0 = set(h.concepts_at(0))
    current = {b for b in B if b in leaves0}
    out = set(current)
    for lvl in range(1, h.params.l_max + 1):
        if rk <= 0:
            # a zero threshold supports every internal concept
            current = set(h.concepts_at(lvl))
        else:
            counts: dict[int, int] = {}
            for c in current:
                p = h.parent(c)
                if p is not None:
                    counts[p] = counts.get(p, 0) + 1
            current = {c for c, cnt in counts.items() if cnt >= rk}
        out |= current
    return out


def minimal_support_set(h: ConceptHierarchy, c: int, r) -> LeafSet:
    """Smallest leaf set (by the keep-first-children rule) that r-supports c.

    Recursively keeps the first ceil(r*k) children, by id order, of every kept
    internal node.  Removing any leaf drops c from the support set.
    """
    if frac(r) <= 0:
        raise ValueError("r <= 0 rejected: empty thresholds support nothing minimally")
    keep = quota(r, h.params.k)

    def rec(d: int) -> set[int]:
        if h.level_of(d) == 0:
            return {d}
        out: set[int] = set()
        for ch in list(h.children(d))[:keep]:
            out |= rec(ch)
        return out

    return frozenset(rec(c))


def sub_support_set(h: ConceptHierarchy, c: int, r1) -> LeafSet:
    """A leaf set under c's subtree that leaves c unsupported at threshold r1:
    keeps only ceil(r1*k) - 1 children per node, recursively."""
    if frac(r1) <= 0:
        raise ValueError("r1 > 0 required")
    keep = quota(r1, h.params.k) - 1
    if h.level_of(c) == 0:
        return frozenset()

    def rec(d: int) -> set[int]:
        if h.level_of(d) == 0:
            return {d}
        out: set[int] = set()
        for ch in list(h.children(d))[:keep]:
            out |= rec(ch)
        return out

    out: set[int] = set()
    for ch in list(h.children(c))[:keep]:
        out |= rec(ch)
    return frozenset(out)
