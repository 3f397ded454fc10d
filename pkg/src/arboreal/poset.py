"""Finite posets, covering graphs and violations.

A :class:`Poset` stores its order as a dense reflexive boolean matrix ``le``
with ``le[x, y]`` true iff ``x <= y``.  Elements are the dense indices
``0..n-1``; ``labels`` maps them to external names.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CycleError, UnreachableError

ROOT_LABEL = "r"


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def close_relation(le: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure of a boolean adjacency matrix (Warshall)."""
    le = np.array(le, dtype=bool, copy=True)
    n = le.shape[0]
    np.fill_diagonal(le, True)
    for k in range(n):
        col = le[:, k]
        if col.sum() > 1:
            le[col] |= le[k]
    return le


def _check_antisymmetric(le: np.ndarray, labels: Sequence[str]) -> None:
    both = le & le.T
    np.fill_diagonal(both, False)
    if both.any():
        x, y = map(int, np.argwhere(both)[0])
        raise CycleError(
            f"elements {labels[x]!r} and {labels[y]!r} precede each other", (x, y)
        )


@dataclass(frozen=True, eq=False)
class Poset:
    le: np.ndarray
    labels: tuple[str, ...]
    root: int | None = field(init=False)

    def __post_init__(self):
        if self.le.dtype != bool or self.le.ndim != 2 or self.le.shape[0] != self.le.shape[1]:
            raise ValueError("le must be a square boolean matrix")
        if len(self.labels) != self.le.shape[0]:
            raise ValueError("one label per element required")
        _freeze(self.le)
        mins = self.minimal_elements()
        object.__setattr__(self, "root", mins[0] if len(mins) == 1 else None)

    @property
    def n(self) -> int:
        return self.le.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poset):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.le, other.le)

    def __hash__(self):
        return hash((self.labels, self.le.tobytes()))

    def __repr__(self) -> str:
        return f"Poset(n={self.n}, pairs={self.num_pairs()}, root={self.root})"

    def leq(self, x: int, y: int) -> bool:
        return bool(self.le[x, y])

    def less(self, x: int, y: int) -> bool:
        return x != y and bool(self.le[x, y])

    def comparable(self, x: int, y: int) -> bool:
        return bool(self.le[x, y] or self.le[y, x])

    def strict(self) -> np.ndarray:
        s = self.le.copy()
        np.fill_diagonal(s, False)
        return s

    def minimal_elements(self) -> list[int]:
        below = self.le.sum(axis=0)
        return [int(i) for i in np.flatnonzero(below == 1)]

    def pairs(self) -> list[tuple[int, int]]:
        """Non-reflexive relation pairs, sorted."""
        return [(int(x), int(y)) for x, y in np.argwhere(self.strict())]

    def num_pairs(self) -> int:
        return int(self.le.sum()) - self.n

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(label) from None

    def ids(self, labels: Iterable) -> list[int]:
        return [self.index(lab) for lab in labels]


def poset_from_relations(
    n: int,
    pairs: Iterable[tuple[int, int]],
    labels: Sequence | None = None,
) -> Poset:
    """Smallest poset on ``0..n-1`` containing every ``(x, y)`` in ``pairs``.

    Raises :class:`CycleError` when the pairs contain a directed cycle.
    """
    if labels is None:
        labels = [str(i) for i in range(n)]
    labels = tuple(str(lab) for lab in labels)
    if len(set(labels)) != len(labels):
        raise ValueError("labels must be unique")
    adj = np.zeros((n, n), dtype=bool)
    for x, y in pairs:
        if not (0 <= x < n and 0 <= y < n):
            raise ValueError(f"pair ({x}, {y}) outside ground set of size {n}")
        if x == y:
            continue
        adj[x, y] = True
    le = close_relation(adj)
    _check_antisymmetric(le, labels)
    return Poset(le, labels)


def poset_from_labeled_pairs(pairs: Iterable[tuple], elements: Iterable = ()) -> Poset:
    """Build a poset from pairs of external labels, ids assigned by first appearance."""
    order: dict[str, int] = {}
    for e in elements:
        order.setdefault(str(e), len(order))
    idx_pairs = []
    for a, b in pairs:
        ia = order.setdefault(str(a), len(order))
        ib = order.setdefault(str(b), len(order))
        idx_pairs.append((ia, ib))
    return poset_from_relations(len(order), idx_pairs, list(order))


@dataclass(frozen=True)
class CoveringGraph:
    n: int
    arcs: tuple[tuple[int, int], ...]
    preds: tuple[tuple[int, ...], ...]
    succs: tuple[tuple[int, ...], ...]

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[tuple[int, int]]) -> "CoveringGraph":
        arcs = tuple(sorted(set(arcs)))
        preds: list[list[int]] = [[] for _ in range(n)]
        succs: list[list[int]] = [[] for _ in range(n)]
        for x, y in arcs:
            preds[y].append(x)
            succs[x].append(y)
        return cls(n, arcs, tuple(map(tuple, preds)), tuple(map(tuple, succs)))

    def indegree(self, z: int) -> int:
        return len(self.preds[z])

    def __contains__(self, arc) -> bool:
        x, y = arc
        return x in self.preds[y]


def cover_matrix(le: np.ndarray) -> np.ndarray:
    """Boolean matrix of the covering relation of a closed order matrix."""
    s = le.astype(np.float32)
    np.fill_diagonal(s, 0.0)
    two_step = (s @ s) > 0
    cov = s > 0
    cov &= ~two_step
    return cov


def transitive_reduction(p: Poset) -> CoveringGraph:
    cov = cover_matrix(p.le)
    return CoveringGraph.from_arcs(p.n, ((int(x), int(y)) for x, y in np.argwhere(cov)))


def incomparable_pairs(p: Poset) -> list[tuple[int, int]]:
    """Unordered incomparable pairs as ``(x, y)`` with ``x < y``."""
    comp = p.le | p.le.T
    return [(int(x), int(y)) for x, y in np.argwhere(~comp) if x < y]


@dataclass(frozen=True)
class ViolationReport:
    violators: tuple[int, ...]
    violations: tuple[tuple[int, int, int], ...]

    @property
    def numvior(self) -> int:
        return len(self.violators)

    @property
    def numvion(self) -> int:
        return len(self.violations)


def violations(c: CoveringGraph) -> ViolationReport:
    """Every pair of distinct lower covers of a common element.

    Triples are ``(x, y, z)`` with ``x < y`` by id, sorted by ``z`` first.
    """
    triples = []
    for z in range(c.n):
        ps = sorted(c.preds[z])
        for i, x in enumerate(ps):
            for y in ps[i + 1:]:
                triples.append((x, y, z))
    violators = tuple(z for z in range(c.n) if len(c.preds[z]) >= 2)
    return ViolationReport(violators, tuple(triples))


def count_violations(c: CoveringGraph) -> int:
    return sum(d * (d - 1) // 2 for d in map(len, c.preds))


def is_arboreal(p: Poset) -> bool:
    if p.root is None:
        return False
    cov = cover_matrix(p.le)
    return bool((cov.sum(axis=0) <= 1).all())


def connected_components(c: CoveringGraph) -> list[list[int]]:
    """Components of the undirected covering graph, each sorted, ordered by min id."""
    seen = [False] * c.n
    comps = []
    for s in range(c.n):
        if seen[s]:
            continue
        seen[s] = True
        stack, comp = [s], []
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in c.preds[u] + c.succs[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _fresh_label(labels: Sequence[str], base: str = ROOT_LABEL) -> str:
    taken = set(labels)
    label = base
    while label in taken:
        label += "_"
    return label


def add_root(p: Poset, label: str = ROOT_LABEL) -> tuple[Poset, int]:
    """Insert a new minimum below every element unless ``p`` is already rooted.

    Returns the rooted poset and the number of connected components of the
    covering graph of ``p`` (1 when ``p`` was already rooted).  The new root
    takes the last id, ``p.n``.
    """
    if p.n == 0:
        raise ValueError("cannot root an empty poset")
    if p.root is not None:
        return p, 1
    k = len(connected_components(transitive_reduction(p)))
    n = p.n
    le = np.zeros((n + 1, n + 1), dtype=bool)
    le[:n, :n] = p.le
    le[n, :] = True
    return Poset(le, p.labels + (_fresh_label(p.labels, label),)), k


def topological_order(p: Poset) -> list[int]:
    """Ids sorted by down-set size, then id; a linear extension of ``p``."""
    size = p.le.sum(axis=0)
    return sorted(range(p.n), key=lambda x: (int(size[x]), x))


def levels(c: CoveringGraph, root: int) -> list[int]:
    """Longest-path distance from ``root`` to each element along covering arcs."""
    n = c.n
    indeg = [len(ps) for ps in c.preds]
    lvl = [-1] * n
    lvl[root] = 0
    # Kahn order over the whole graph so that every element is finalised once
    # all of its covering predecessors are.
    ready = [x for x in range(n) if indeg[x] == 0]
    order = []
    while ready:
        u = ready.pop()
        order.append(u)
        for w in c.succs[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    for u in order:
        if u == root:
            continue
        best = max((lvl[x] for x in c.preds[u]), default=-1)
        if best >= 0:
            lvl[u] = best + 1
    missing = [x for x in range(n) if lvl[x] < 0]
    if missing:
        raise UnreachableError(f"elements {missing} are not reachable from {root}")
    return lvl


def induced_subposet(p: Poset, subset: Iterable[int]) -> Poset:
    """Restriction of ``p`` to ``subset``, re-indexed in ascending id order."""
    keep = sorted(set(subset))
    le = p.le[np.ix_(keep, keep)].copy()
    return Poset(le, tuple(p.labels[i] for i in keep))


def relabel(p: Poset, perm: Sequence[int]) -> Poset:
    """Poset with element ``i`` moved to position ``perm[i]``."""
    inv = np.argsort(perm)
    le = p.le[np.ix_(inv, inv)].copy()
    return Poset(le, tuple(p.labels[i] for i in inv))


def random_poset(n: int, density: float, rng: np.random.Generator, rooted: bool = True) -> Poset:
    """Closure of a random DAG on ``n`` elements (plus a root when ``rooted``).

    Each pair ``i < j`` of a random permutation gets an arc with probability
    ``density``.
    """
    perm = rng.permutation(n)
    adj = np.zeros((n, n), dtype=bool)
    mask = np.triu(rng.random((n, n)) < density, k=1)
    adj[np.ix_(perm, perm)] = mask
    p = Poset(close_relation(adj), tuple(str(i) for i in range(n)))
    if rooted and n:
        p, _ = add_root(p)
    return p


def to_dot(p: Poset, name: str = "poset") -> str:
    """Graphviz source for the Hasse diagram of ``p``, ranked by level when rooted."""
    c = transitive_reduction(p)
    lines = [f"digraph {_dot_id(name)} {{", "  rankdir=BT;"]
    for x in range(p.n):
        lines.append(f"  n{x} [label={_dot_id(p.labels[x])}];")
    for x, y in c.arcs:
        lines.append(f"  n{x} -> n{y};")
    if p.root is not None:
        by_level: dict[int, list[int]] = {}
        for x, lv in enumerate(levels(c, p.root)):
            by_level.setdefault(lv, []).append(x)
        for lv in sorted(by_level):
            members = " ".join(f"n{x};" for x in by_level[lv])
            lines.append(f"  {{ rank=same; {members} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_id(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'
