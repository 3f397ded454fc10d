"""Partition certificates for arboreal extensions.

An arboreal extension with ``s`` jumps splits into ``s + 1`` jump-free
subtrees once its jumps are deleted.  A :class:`PartitionCertificate` records
that split: the parts, the root of each part, and for every non-root part the
element ``f`` whose jump enters it.  :func:`verify_certificate` checks the
four structural properties that make such a split realisable, and the two
conversion functions move between certificates and extensions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import InvalidCertificate, MalformedCertificate
from .extension import ArborealExtension, extension_from_order
from .poset import (
    Poset,
    add_root,
    close_relation,
    connected_components,
    cover_matrix,
    induced_subposet,
    is_arboreal,
    transitive_reduction,
)


@dataclass(frozen=True)
class InducedRelation:
    """Relation between parts: ``(i, j)`` when some element of part i lies below one of part j."""

    parts: tuple[frozenset[int], ...]
    arcs: frozenset[tuple[int, int]]
    closure: np.ndarray = field(compare=False, repr=False)

    @property
    def is_order(self) -> bool:
        both = self.closure & self.closure.T
        np.fill_diagonal(both, False)
        return not both.any()

    def covers(self) -> set[tuple[int, int]]:
        """Covering pairs of the induced order (only meaningful when ``is_order``)."""
        return {(int(i), int(j)) for i, j in np.argwhere(cover_matrix(self.closure))}


def induced_relation(p: Poset, parts: Iterable[Iterable[int]]) -> InducedRelation:
    parts = tuple(frozenset(x) for x in parts)
    owner = np.empty(p.n, dtype=np.int64)
    for i, part in enumerate(parts):
        owner[list(part)] = i
    m = len(parts)
    adj = np.zeros((m, m), dtype=bool)
    xs, ys = np.nonzero(p.le)
    adj[owner[xs], owner[ys]] = True
    arcs = frozenset((int(i), int(j)) for i, j in np.argwhere(adj) if i != j)
    return InducedRelation(parts, arcs, close_relation(adj))


@dataclass(frozen=True)
class PartitionCertificate:
    """Parts ordered by smallest element; ``sources[i]`` is ``f`` of part i, ``None`` for the root part."""

    parts: tuple[frozenset[int], ...]
    roots: tuple[int, ...]
    sources: tuple[int | None, ...]

    @classmethod
    def create(cls, parts: Iterable[Iterable[int]], roots: Iterable[int], sources: Iterable[int | None]):
        rows = sorted(zip((frozenset(x) for x in parts), roots, sources), key=lambda t: min(t[0], default=-1))
        return cls(
            tuple(r[0] for r in rows),
            tuple(int(r[1]) for r in rows),
            tuple(None if r[2] is None else int(r[2]) for r in rows),
        )

    @property
    def size(self) -> int:
        return len(self.parts)

    def part_of(self) -> dict[int, int]:
        return {x: i for i, part in enumerate(self.parts) for x in part}

    @property
    def root_part(self) -> int | None:
        idx = [i for i, f in enumerate(self.sources) if f is None]
        return idx[0] if len(idx) == 1 else None

    def source_sets(self) -> list[frozenset[int]]:
        """The ``g`` map: elements reached by following ``f`` back to the root part.

        Raises :class:`InvalidCertificate` when ``f`` chains into a cycle.
        """
        owner = self.part_of()
        g: list[frozenset[int] | None] = [None] * self.size
        for start in range(self.size):
            chain = []
            i = start
            while g[i] is None and self.sources[i] is not None:
                if i in chain:
                    raise InvalidCertificate(f"jump sources cycle through part {i + 1}")
                chain.append(i)
                i = owner[self.sources[i]]
            acc = g[i] if g[i] is not None else frozenset()
            if g[i] is None:
                g[i] = acc
            for j in reversed(chain):
                acc = acc | {self.sources[j]}
                g[j] = acc
        return g


@dataclass
class VerificationReport:
    """Outcome per property; ``None`` means the property was not evaluated."""

    property1: bool
    property2: bool
    property3: bool
    property4: bool | None
    witnesses: dict[int, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.property1 and self.property2 and self.property3 and self.property4)

    def failures(self) -> list[int]:
        flags = (self.property1, self.property2, self.property3, self.property4)
        return [i + 1 for i, v in enumerate(flags) if not v]


def _check_shape(p: Poset, cert: PartitionCertificate) -> None:
    seen: set[int] = set()
    for i, part in enumerate(cert.parts):
        if not part:
            raise MalformedCertificate(f"part {i + 1} is empty")
        if seen & part:
            raise MalformedCertificate(f"part {i + 1} overlaps an earlier part")
        seen |= part
    if seen != set(range(p.n)):
        missing = sorted(set(range(p.n)) - seen)
        raise MalformedCertificate(f"parts do not cover the ground set; missing {missing[:5]}")
    if len(cert.roots) != cert.size or len(cert.sources) != cert.size:
        raise MalformedCertificate("one root and one source entry per part required")
    for i, (part, r) in enumerate(zip(cert.parts, cert.roots)):
        if r not in part:
            raise MalformedCertificate(f"root of part {i + 1} lies outside it")
    if cert.root_part is None:
        raise MalformedCertificate("exactly one part must have no jump source")
    for f in cert.sources:
        if f is not None and not 0 <= f < p.n:
            raise MalformedCertificate(f"jump source {f} out of range")


def verify_certificate(p: Poset, cert: PartitionCertificate) -> VerificationReport:
    _check_shape(p, cert)
    labels = p.labels
    wit: dict[int, str] = {}
    owner = cert.part_of()
    rp = cert.root_part

    prop1 = True
    for i, (part, r) in enumerate(zip(cert.parts, cert.roots)):
        sub = induced_subposet(p, part)
        if not is_arboreal(sub) or sub.labels[sub.root] != labels[r]:
            prop1 = False
            wit[1] = f"part {i + 1} is not arboreal with root {labels[r]}"
            break

    rel = induced_relation(p, cert.parts)
    prop2 = rel.is_order and bool(rel.closure[rp].all())
    if p.root is not None and owner[p.root] != rp:
        prop2 = False
    if not prop2:
        wit[2] = "induced part relation is not a partial order rooted at the root part"

    prop3 = True
    for j, f in enumerate(cert.sources):
        if f is None:
            continue
        if owner[f] == j:
            prop3, wit[3] = False, f"f of part {j + 1} lies inside the part"
            break
        if p.le[f, cert.roots[j]]:
            prop3 = False
            wit[3] = f"f of part {j + 1} is {labels[f]}, which already precedes root {labels[cert.roots[j]]}"
            break
    g = None
    if prop3:
        m = cert.size
        adj = np.zeros((m, m), dtype=bool)
        for j, f in enumerate(cert.sources):
            if f is not None:
                adj[owner[f], j] = True
        b = close_relation(adj)
        both = b & b.T
        np.fill_diagonal(both, False)
        if both.any():
            prop3, wit[3] = False, "jump sources form a cycle between parts"
        elif not b[rp].all():
            prop3, wit[3] = False, "some part is not reached from the root part"
        elif (rel.closure & ~b).any():
            i, j = map(int, np.argwhere(rel.closure & ~b)[0])
            prop3, wit[3] = False, f"part order pair ({i + 1}, {j + 1}) is missing from the jump tree"
        else:
            g = cert.source_sets()

    prop4: bool | None = None
    if g is not None:
        prop4 = True
        cov = cover_matrix(p.le)
        for x, y in np.argwhere(cov):
            u, v = owner[int(x)], owner[int(y)]
            if u == v:
                continue
            ok = any(owner[z] == u and p.le[x, z] for z in g[v])
            if not ok:
                prop4 = False
                wit[4] = f"cover {labels[x]} < {labels[y]} has no jump source above {labels[x]} in its part"
                break
    else:
        wit.setdefault(4, "not checked: property 3 failed")
    return VerificationReport(prop1, prop2, prop3, prop4, wit)


def extension_to_certificate(a: ArborealExtension) -> PartitionCertificate:
    """Split ``a`` at its jumps: one part per jump-free subtree."""
    n = a.base.n
    jumps = a.jumps
    top = list(range(n))
    # parent pointers let us find each element's part root by walking up
    order = sorted(range(n), key=lambda y: int(a.le[:, y].sum()))
    for y in order:
        q = a.parent[y]
        if q is not None and (q, y) not in jumps:
            top[y] = top[q]
    groups: dict[int, set[int]] = {}
    for y in range(n):
        groups.setdefault(top[y], set()).add(y)
    roots = list(groups)
    return PartitionCertificate.create(
        (groups[r] for r in roots), roots, (a.parent[r] for r in roots)
    )


def certificate_to_extension(p: Poset, cert: PartitionCertificate) -> ArborealExtension:
    """Glue the parts together with one jump per non-root part."""
    report = verify_certificate(p, cert)
    if not report.ok:
        raise InvalidCertificate(f"certificate fails properties {report.failures()}", report)
    rel = np.zeros_like(p.le)
    root = cert.roots[cert.root_part]
    rel[root, :] = True
    for part in cert.parts:
        idx = sorted(part)
        rel[np.ix_(idx, idx)] |= p.le[np.ix_(idx, idx)]
    for j, f in enumerate(cert.sources):
        if f is not None:
            rel[f, cert.roots[j]] = True
    le = close_relation(rel)
    try:
        ext = extension_from_order(p, le)
    except ValueError:
        raise InvalidCertificate("glued relation is not arboreal", report) from None
    problems = ext.problems()
    if problems:
        raise InvalidCertificate(problems[0], report)
    return ext


def format_certificate(p: Poset, cert: PartitionCertificate) -> str:
    labels = p.labels
    lines = []
    for i, (part, r, f) in enumerate(zip(cert.parts, cert.roots, cert.sources), 1):
        members = ", ".join(labels[x] for x in sorted(part))
        tail = "" if f is None else f" f -> {labels[f]}"
        lines.append(f"part {i}: {{{members}}} root {labels[r]}{tail}")
    return "\n".join(lines) + "\n"


_PART_LINE = re.compile(r"^part\s+\d+\s*:\s*\{(.*)\}\s*root\s+(\S+)(?:\s+f\s*->\s*(\S+))?\s*$")


def parse_certificate(text: str, p: Poset) -> PartitionCertificate:
    parts, roots, sources = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _PART_LINE.match(line)
        if not m:
            raise MalformedCertificate(f"line {lineno}: expected 'part i: {{...}} root r [f -> x]'")
        try:
            members = [p.index(s.strip()) for s in m.group(1).split(",") if s.strip()]
            roots.append(p.index(m.group(2)))
            sources.append(None if m.group(3) is None else p.index(m.group(3)))
        except KeyError as exc:
            raise MalformedCertificate(f"line {lineno}: unknown element {exc.args[0]!r}") from None
        parts.append(members)
    return PartitionCertificate.create(parts, roots, sources)


@dataclass
class ComponentSolution:
    total: int
    extension: ArborealExtension
    component_jumps: list[int]

    @property
    def k(self) -> int:
        return len(self.component_jumps)


def solve_by_components(p: Poset, solver: Callable[[Poset], ArborealExtension]) -> ComponentSolution:
    """Solve each covering-graph component separately and glue the answers.

    ``solver`` receives each component with a root added when it has none.
    The returned extension lives on ``add_root(p)``; ``total`` is the jump
    count for ``p`` itself, one extra jump per additional component.
    """
    q, _ = add_root(p)
    if p.root is not None:
        ext = solver(p)
        return ComponentSolution(ext.jump_count, ext, [ext.jump_count])
    comps = connected_components(transitive_reduction(p))
    parent: list[int | None] = [None] * q.n
    counts = []
    for comp in comps:
        sub, _ = add_root(induced_subposet(p, comp))
        ext = solver(sub)
        counts.append(ext.jump_count)
        ids = list(comp) + [q.root]
        for i in range(len(comp)):
            par = ext.parent[i]
            parent[comp[i]] = q.root if par is None else ids[par]
    assembled = ArborealExtension(q, tuple(parent))
    assert assembled.is_valid() and assembled.jump_count == sum(counts)
    return ComponentSolution(sum(counts) + len(comps) - 1, assembled, counts)
