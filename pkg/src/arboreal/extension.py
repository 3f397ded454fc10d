"""Arboreal extensions and the two violation-removal procedures.

Both procedures share one loop: while the current order has a violation,
a selection rule picks a violator ``v``, two of its lower covers ``x1`` and
``x2``, and an element ``z`` that is minimal in ``N[x1] \\ N[x2]`` (closed
down-sets); the relation ``x2 < z`` is then added.  :func:`lexicographic_rule`
gives the plain minimal-extension algorithm and :func:`greedy_rule` the
level-based heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import FormatError, UnrootedError
from .poset import Poset, close_relation, cover_matrix


@dataclass(frozen=True, eq=False)
class ArborealExtension:
    """A tree on the ground set of ``base`` whose ancestor order contains ``base``.

    ``parent[y]`` is ``None`` only for the root.
    """

    base: Poset
    parent: tuple[int | None, ...]

    def __post_init__(self):
        object.__setattr__(self, "parent", tuple(None if q is None else int(q) for q in self.parent))
        if len(self.parent) != self.base.n:
            raise ValueError("one parent entry per element required")

    def __eq__(self, other):
        if not isinstance(other, ArborealExtension):
            return NotImplemented
        return self.parent == other.parent and self.base == other.base

    def __hash__(self):
        return hash(self.parent)

    @property
    def root(self) -> int | None:
        roots = [y for y, q in enumerate(self.parent) if q is None]
        return roots[0] if len(roots) == 1 else None

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return [(q, y) for y, q in enumerate(self.parent) if q is not None]

    @cached_property
    def le(self) -> np.ndarray:
        n = self.base.n
        adj = np.zeros((n, n), dtype=bool)
        for q, y in self.arcs:
            adj[q, y] = True
        return close_relation(adj)

    @property
    def jumps(self) -> set[tuple[int, int]]:
        return jumps_of(self)

    @property
    def jump_count(self) -> int:
        return len(jumps_of(self))

    def problems(self) -> list[str]:
        """Reasons this is not a valid arboreal extension (empty when valid)."""
        out = []
        n = self.base.n
        roots = [y for y, q in enumerate(self.parent) if q is None]
        if len(roots) != 1:
            out.append(f"expected exactly one root, found {len(roots)}")
            return out
        root = roots[0]
        if self.base.root is not None and root != self.base.root:
            out.append(f"root {root} differs from base root {self.base.root}")
        for q, y in self.arcs:
            if not 0 <= q < n:
                out.append(f"parent {q} of {y} out of range")
                return out
        depth_ok = self._reaches_root(root)
        if not depth_ok:
            out.append("parent pointers contain a cycle")
            return out
        missing = self.base.le & ~self.le
        if missing.any():
            x, y = map(int, np.argwhere(missing)[0])
            out.append(f"base relation ({x}, {y}) not implied by the tree")
        return out

    def _reaches_root(self, root: int) -> bool:
        state = [0] * self.base.n  # 0 unknown, 1 in progress, 2 reaches root
        state[root] = 2
        for s in range(self.base.n):
            path = []
            u = s
            while state[u] == 0:
                state[u] = 1
                path.append(u)
                u = self.parent[u]
            if state[u] == 1:
                return False
            for w in path:
                state[w] = 2
        return True

    def is_valid(self) -> bool:
        return not self.problems()

    def to_text(self) -> str:
        return format_extension(self)


def jumps_of(a: ArborealExtension) -> set[tuple[int, int]]:
    """Tree arcs whose endpoints are incomparable in the base poset."""
    return {(q, y) for q, y in a.arcs if not a.base.le[q, y]}


def extension_from_order(base: Poset, le: np.ndarray) -> ArborealExtension:
    """Read the tree off an arboreal order ``le`` extending ``base``."""
    cov = cover_matrix(le)
    indeg = cov.sum(axis=0)
    if (indeg > 1).any():
        raise ValueError("order is not arboreal")
    parent = [None] * base.n
    for q, y in np.argwhere(cov):
        parent[int(y)] = int(q)
    return ArborealExtension(base, tuple(parent))


class WorkingOrder:
    """Mutable order ``A`` grown from a poset by adding relations.

    Keeps the closure, strict relation and covering relation in sync; used
    by the selection rules to query down-sets, levels and violation counts.
    """

    def __init__(self, p: Poset):
        self.n = p.n
        self.le = p.le.copy()
        self.strict = self.le.astype(np.float32)
        np.fill_diagonal(self.strict, 0.0)
        self.cover = cover_matrix(self.le)
        self.indeg = self.cover.sum(axis=0).astype(np.int64)

    def numviol(self) -> int:
        d = self.indeg
        return int((d * (d - 1) // 2).sum())

    def violators(self) -> np.ndarray:
        return np.flatnonzero(self.indeg >= 2)

    def lower_covers(self, v: int) -> list[int]:
        return [int(x) for x in np.flatnonzero(self.cover[:, v])]

    def closed_down(self, x: int) -> np.ndarray:
        return self.le[:, x]

    def minimal_in(self, mask: np.ndarray) -> list[int]:
        """Elements of ``mask`` with no other element of ``mask`` below them."""
        if not mask.any():
            return []
        below = self.strict[mask].any(axis=0)
        return [int(z) for z in np.flatnonzero(mask & ~below)]

    def levels(self) -> np.ndarray:
        order = np.argsort(self.le.sum(axis=0), kind="stable")
        lvl = np.zeros(self.n, dtype=np.int64)
        strict = self.strict > 0
        for y in order:
            below = strict[:, y]
            if below.any():
                lvl[y] = lvl[below].max() + 1
        return lvl

    def numpred(self, x: int) -> int:
        viol = self.violators()
        return int(self.le[viol, x].sum())

    def _columns_after(self, a: int, b: int, strict: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cols = np.flatnonzero(self.le[b])
        sub = strict[:, cols]
        two = (strict @ sub) > 0
        return cols, (sub > 0) & ~two

    def _grown_strict(self, a: int, b: int) -> np.ndarray:
        rows = np.flatnonzero(self.le[:, a])
        cols = np.flatnonzero(self.le[b])
        strict = self.strict.copy()
        strict[np.ix_(rows, cols)] = 1.0
        return strict

    def violations_after(self, a: int, b: int) -> int:
        """Violation count if ``a < b`` were added; the order is left untouched.

        Only elements above ``b`` can change their lower covers.
        """
        strict = self._grown_strict(a, b)
        cols, cov = self._columns_after(a, b, strict)
        new_d = cov.sum(axis=0).astype(np.int64)
        old_d = self.indeg[cols]
        delta = (new_d * (new_d - 1) // 2).sum() - (old_d * (old_d - 1) // 2).sum()
        return self.numviol() + int(delta)

    def insert(self, a: int, b: int) -> None:
        rows = self.le[:, a].copy()
        cols = self.le[b].copy()
        self.strict = self._grown_strict(a, b)
        self.le[np.ix_(rows, cols)] = True
        cidx, cov = self._columns_after(a, b, self.strict)
        self.cover[:, cidx] = cov
        self.indeg[cidx] = cov.sum(axis=0)


SelectionRule = Callable[[WorkingOrder], "tuple[int, int, int, int]"]
"""Picks ``(v, x1, x2, z)`` from the current order; ``x2 < z`` is then added."""


def lexicographic_rule(a: WorkingOrder) -> tuple[int, int, int, int]:
    v = int(a.violators()[0])
    x1, x2 = a.lower_covers(v)[:2]
    z = a.minimal_in(a.closed_down(x1) & ~a.closed_down(x2))[0]
    return v, x1, x2, z


def greedy_rule(a: WorkingOrder) -> tuple[int, int, int, int]:
    """Deepest violator, most-violated cover, then the best tentative insertion.

    Ties go to the smallest id, then to the lexicographically smallest
    ``(x2, z)``.
    """
    viol = a.violators()
    lvl = a.levels()
    v = int(viol[np.argmax(lvl[viol])])  # argmax returns the first, i.e. smallest id
    covers = a.lower_covers(v)
    counts = a.le[np.ix_(viol, covers)].sum(axis=0)
    x1 = covers[int(np.argmax(counts))]
    best = None
    for x2 in covers:
        if x2 == x1:
            continue
        for z in a.minimal_in(a.closed_down(x1) & ~a.closed_down(x2)):
            key = (a.violations_after(x2, z), x2, z)
            if best is None or key < best:
                best = key
    _, x2, z = best
    return v, x1, x2, z


def numpred(a: WorkingOrder | Poset, x: int) -> int:
    """Violators ``v'`` of the order with ``v' <= x``."""
    if isinstance(a, Poset):
        a = WorkingOrder(a)
    return a.numpred(x)


def run_rule(p: Poset, rule: SelectionRule, trace: list | None = None) -> ArborealExtension:
    if p.root is None:
        raise UnrootedError("extension algorithms need a rooted poset")
    a = WorkingOrder(p)
    count = a.numviol()
    while count > 0:
        v, x1, x2, z = rule(a)
        assert a.cover[x1, v] and a.cover[x2, v] and x1 != x2, "rule must pick a violation"
        assert a.le[z, x1] and not a.le[z, x2], "z must lie in N[x1] minus N[x2]"
        a.insert(x2, z)
        new = a.numviol()
        assert new < count, "insertion must remove at least one violation"
        if trace is not None:
            trace.append((v, x1, x2, z, new))
        count = new
    return extension_from_order(p, a.le)


def minimal_extension_algo1(p: Poset, rule: SelectionRule = lexicographic_rule) -> ArborealExtension:
    return run_rule(p, rule)


def greedy_heuristic_algo2(p: Poset) -> ArborealExtension:
    return run_rule(p, greedy_rule)


def verify_minimality(a: ArborealExtension) -> bool:
    """True iff dropping any single jump leaves a relation that is not arboreal."""
    base = a.base
    for q, y in jumps_of(a):
        adj = base.le.copy()
        for pq, py in a.arcs:
            if (pq, py) != (q, y):
                adj[pq, py] = True
        le = close_relation(adj)
        mins = np.flatnonzero(le.sum(axis=0) == 1)
        if len(mins) == 1 and (cover_matrix(le).sum(axis=0) <= 1).all():
            return False
    return True


def format_extension(a: ArborealExtension) -> str:
    """One line per element: ``y <- parent`` with a ``jump`` marker; the root has no parent."""
    labels = a.base.labels
    jumps = jumps_of(a)
    lines = []
    for y, q in enumerate(a.parent):
        if q is None:
            lines.append(f"{labels[y]} <-")
        else:
            mark = " jump" if (q, y) in jumps else ""
            lines.append(f"{labels[y]} <- {labels[q]}{mark}")
    return "\n".join(lines) + "\n"


def parse_extension(text: str, base: Poset) -> ArborealExtension:
    parent: list[int | None] = [None] * base.n
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "<-" not in line:
            raise FormatError(f"line {lineno}: expected 'child <- parent'")
        left, right = line.split("<-", 1)
        fields = right.split()
        if fields and fields[-1] == "jump":
            fields = fields[:-1]
        try:
            y = base.index(left.strip())
            q = base.index(fields[0]) if fields else None
        except KeyError as exc:
            raise FormatError(f"line {lineno}: unknown element {exc.args[0]!r}") from None
        if y in seen:
            raise FormatError(f"line {lineno}: element {left.strip()!r} listed twice")
        seen.add(y)
        parent[y] = q
    if len(seen) != base.n:
        raise FormatError(f"extension lists {len(seen)} of {base.n} elements")
    return ArborealExtension(base, tuple(parent))


def extension_from_labels(base: Poset, parent_of: dict) -> ArborealExtension:
    """Build an extension from a ``{child_label: parent_label}`` mapping."""
    parent: list[int | None] = [None] * base.n
    for child, par in parent_of.items():
        parent[base.index(child)] = base.index(par)
    return ArborealExtension(base, tuple(parent))
