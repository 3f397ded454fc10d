"""Exact arboreal jump number: branch-and-bound and a brute-force oracle.

The branch-and-bound builds the tree top-down.  Below a node ``p`` the
remaining elements ``S`` split into subtrees hanging from ``p``; two elements
comparable in the poset can never sit in sibling subtrees, so every subtree is
a union of comparability components of ``S``.  A subtree that merges ``t + 1``
components needs at least ``t`` jumps inside it, which gives the bound used to
prune groupings.  Each subtree is opened by one of its minimal elements, and
the arc from ``p`` to it is a jump unless ``p`` lies below it.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import prod

import numpy as np

from .errors import TooLargeError, UnrootedError
from .extension import ArborealExtension, greedy_heuristic_algo2
from .poset import Poset, cover_matrix


class Status(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    TIME_LIMIT = "TimeLimit"


@dataclass
class SolveResult:
    status: Status
    jump_count: int | None
    extension: ArborealExtension | None
    best_bound: int
    wall_time: float
    incumbents: list[tuple[float, int]] = field(default_factory=list)
    nodes: int = 0

    @property
    def gap(self) -> float | None:
        """Relative gap ``(best - bound) / best``; 0 when both are 0."""
        if self.jump_count is None:
            return None
        if self.jump_count == 0:
            return 0.0
        return (self.jump_count - self.best_bound) / self.jump_count


class _TimeUp(Exception):
    pass


class _BlockSearch:
    def __init__(self, p: Poset, deadline: float | None, memo_limit: int):
        n = p.n
        self.memo_limit = memo_limit
        self.n = n
        self.le = p.le
        self.down = [0] * n   # strict predecessors
        self.comp = [0] * n   # comparable elements, self included
        for y in range(n):
            for x in np.flatnonzero(p.le[:, y]):
                x = int(x)
                if x != y:
                    self.down[y] |= 1 << x
            for x in np.flatnonzero(p.le[:, y] | p.le[y]):
                self.comp[y] |= 1 << int(x)
        self.deadline = deadline
        self.nodes = 0
        self.f_exact: dict[tuple[int, int], tuple[int, int]] = {}
        self.f_lower: dict[tuple[int, int], int] = {}
        self.g_exact: dict[tuple[int, int], tuple[int, int]] = {}
        self.g_lower: dict[tuple[int, int], int] = {}
        self._comps: dict[int, list[int]] = {}

    def _tick(self):
        self.nodes += 1
        if self.nodes & 255 == 0:
            if self.deadline is not None and time.perf_counter() > self.deadline:
                raise _TimeUp
            # lower bounds only prune, so they can be dropped at any point
            if len(self.f_lower) + len(self.g_lower) + len(self._comps) > self.memo_limit:
                self.f_lower.clear()
                self.g_lower.clear()
                self._comps.clear()

    def trim(self):
        # exact entries are needed to rebuild the tree, so only drop them between rounds
        if len(self.f_exact) + len(self.g_exact) > self.memo_limit:
            self.f_exact.clear()
            self.g_exact.clear()

    def components(self, s: int) -> list[int]:
        cached = self._comps.get(s)
        if cached is not None:
            return cached
        out = []
        rest = s
        while rest:
            low = rest & -rest
            comp = frontier = low
            while frontier:
                grown = 0
                f = frontier
                while f:
                    b = f & -f
                    f ^= b
                    grown |= self.comp[b.bit_length() - 1]
                frontier = grown & rest & ~comp
                comp |= frontier
            out.append(comp)
            rest &= ~comp
        self._comps[s] = out
        return out

    def forest(self, p: int, s: int, ub: int) -> int:
        """Fewest jumps to hang ``s`` below ``p``; a value ``>= ub`` is only a bound."""
        if not s:
            return 0
        key = (p, s)
        hit = self.f_exact.get(key)
        if hit is not None:
            return hit[0]
        lb = self.f_lower.get(key, 0)
        if lb >= ub:
            return lb
        self._tick()
        comps = self.components(s)
        first, others = comps[0], comps[1:]
        best, choice = ub, 0
        for t in range(len(others) + 1):
            if t >= best:
                break
            for group in combinations(others, t):
                block = first
                for c in group:
                    block |= c
                g = self.subtree(p, block, best)
                if g >= best:
                    continue
                r = self.forest(p, s & ~block, best - g)
                if g + r < best:
                    best, choice = g + r, block
        if choice:
            self.f_exact[key] = (best, choice)
            return best
        self.f_lower[key] = ub
        return ub

    def subtree(self, p: int, block: int, ub: int) -> int:
        """Fewest jumps for one child subtree of ``p`` spanning ``block``."""
        key = (p, block)
        hit = self.g_exact.get(key)
        if hit is not None:
            return hit[0]
        lb = self.g_lower.get(key, 0)
        if lb >= ub:
            return lb
        self._tick()
        tops = []
        b = block
        while b:
            low = b & -b
            b ^= low
            c = low.bit_length() - 1
            if not self.down[c] & block:
                tops.append((0 if self.le[p, c] else 1, c))
        tops.sort()
        best, choice = ub, -1
        for jump, c in tops:
            if jump >= best:
                continue
            r = self.forest(c, block & ~(1 << c), best - jump)
            if jump + r < best:
                best, choice = jump + r, c
        if choice >= 0:
            self.g_exact[key] = (best, choice)
            return best
        self.g_lower[key] = ub
        return ub

    def build(self, p: int, s: int, parent: list) -> None:
        while s:
            _, block = self.f_exact[(p, s)]
            _, c = self.g_exact[(p, block)]
            parent[c] = p
            self.build(c, block & ~(1 << c), parent)
            s &= ~block


def solve_exact_bb(
    p: Poset, time_limit: float | None = 60.0, seed: bool = True, memo_limit: int = 2_000_000
) -> SolveResult:
    """Exact search for a minimum-jump arboreal extension of a rooted poset.

    The target jump count is raised one step at a time, so a run cut short by
    ``time_limit`` still reports a proven lower bound.  With ``seed`` the
    greedy heuristic provides the first incumbent.  ``memo_limit`` bounds
    the number of cached subproblems kept per table family.
    """
    if p.root is None:
        raise UnrootedError("exact search needs a rooted poset; apply add_root first")
    start = time.perf_counter()
    deadline = None if time_limit is None else start + time_limit
    incumbent = greedy_heuristic_algo2(p) if seed else None
    trail = [] if incumbent is None else [(time.perf_counter() - start, incumbent.jump_count)]
    search = _BlockSearch(p, deadline, memo_limit)
    r = p.root
    everything = ((1 << p.n) - 1) & ~(1 << r)
    cap = incumbent.jump_count if incumbent is not None else p.n
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20 * p.n + 1000))
    proven = 0
    try:
        for target in range(cap):
            search.trim()
            # target 0 asks for a zero-jump tree; each failure proves one more jump is needed
            value = search.forest(r, everything, target + 1)
            if value <= target:
                parent: list[int | None] = [None] * p.n
                search.build(r, everything, parent)
                ext = ArborealExtension(p, tuple(parent))
                assert ext.is_valid() and ext.jump_count == value
                if incumbent is None or value < incumbent.jump_count:
                    incumbent = ext
                    trail.append((time.perf_counter() - start, value))
                break
            proven = target + 1
        status = Status.OPTIMAL
        proven = incumbent.jump_count
    except _TimeUp:
        status = Status.TIME_LIMIT
    finally:
        sys.setrecursionlimit(old_limit)
    return SolveResult(
        status,
        None if incumbent is None else incumbent.jump_count,
        incumbent,
        proven,
        time.perf_counter() - start,
        trail,
        search.nodes,
    )


def _candidate_parents(p: Poset) -> np.ndarray:
    # parent arcs of an arboreal extension are covers of p or incomparable pairs
    allowed = cover_matrix(p.le) | ~(p.le | p.le.T)
    np.fill_diagonal(allowed, False)
    return allowed


def brute_force_search(
    p: Poset, max_n: int = 9, max_assignments: int = 2 ** 24, chunk: int = 1 << 17
) -> tuple[int, ArborealExtension]:
    """Enumerate every parent assignment and keep the best feasible tree.

    Unrooted posets are handled by trying every minimal element as the root.
    Returns ``(jumps, extension)``.
    """
    n = p.n
    if n > max_n:
        raise TooLargeError(f"{n} elements exceed the oracle cap of {max_n}")
    if n == 0:
        raise ValueError("empty poset has no arboreal extension")
    allowed = _candidate_parents(p)
    down = np.array(
        [sum(1 << int(x) for x in np.flatnonzero(p.le[:, y]) if x != y) for y in range(n)],
        dtype=np.int64,
    )
    jump_cost = (~p.le).astype(np.int64)
    roots = [p.root] if p.root is not None else p.minimal_elements()
    best_cost, best_parent = None, None
    for r in roots:
        others = [j for j in range(n) if j != r]
        cands = [np.flatnonzero(allowed[:, j]) for j in others]
        total = prod(len(c) for c in cands)
        if total > max_assignments:
            raise TooLargeError(f"{total} parent assignments exceed the cap of {max_assignments}")
        for lo in range(0, total, chunk):
            idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
            parent = np.full((len(idx), n), r, dtype=np.int64)
            rem = idx.copy()
            for j, c in zip(others, cands):
                parent[:, j] = c[rem % len(c)]
                rem //= len(c)
            bit = np.left_shift(np.int64(1), parent)
            anc = np.zeros_like(parent)
            for _ in range(n):
                anc = bit | np.take_along_axis(anc, parent, axis=1)
                anc[:, r] = 0
            ok = np.ones(len(idx), dtype=bool)
            for j in others:
                a = anc[:, j]
                ok &= ((a >> j) & 1) == 0
                ok &= ((a >> r) & 1) == 1
                ok &= (down[j] & ~a) == 0
            if not ok.any():
                continue
            cost = np.zeros(len(idx), dtype=np.int64)
            for j in others:
                cost += jump_cost[parent[:, j], j]
            cost = np.where(ok, cost, n + 1)
            k = int(np.argmin(cost))
            if best_cost is None or cost[k] < best_cost:
                best_cost = int(cost[k])
                best_parent = [None if j == r else int(parent[k, j]) for j in range(n)]
    assert best_parent is not None, "a linear extension always exists"
    ext = ArborealExtension(p, tuple(best_parent))
    assert ext.is_valid() and ext.jump_count == best_cost
    return best_cost, ext


def brute_force_oracle(p: Poset, max_n: int = 9, max_assignments: int = 2 ** 24) -> int:
    return brute_force_search(p, max_n, max_assignments)[0]
