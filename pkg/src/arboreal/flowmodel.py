"""Multi-commodity flow integer program for the arboreal jump number.

Arc set ``E`` holds the covering arcs of the poset plus both orientations of
every incomparable pair.  Binary ``x_ij`` selects tree arcs; continuous
``f_ij^k`` carries the unit of flow from the root to destination ``k``.
Objective: maximise the number of selected covering arcs, which is ``n - 1``
minus the number of jumps.

Constraint families, numbered as in the source formulation:

(2) every non-root ``j`` receives its own unit of flow
(3) conservation of commodity ``k`` at ``j`` (``j != k``, both non-root)
(4) every non-root ``j`` has exactly one selected incoming arc
(5) for every covering arc ``(j, k)`` with ``j`` non-root, commodity ``k`` enters ``j``
(6) ``f_ij^k <= x_ij``

No arc enters the root: in a rooted poset the root is comparable to every
element and covers nothing, so ``E`` never contains ``(i, r)``.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import InfeasibleAssignment, UnrootedError
from .extension import ArborealExtension
from .poset import Poset, cover_matrix

FAMILIES = (2, 3, 4, 5, 6)
INT_TOL = 1e-6
_LP_NAME = re.compile(r"^[A-Za-z0-9!\"#$%&()/,.;?@`'{}|~]+$")

Row = tuple[str, list[tuple[int, str]], str, int]


@dataclass(frozen=True, eq=False)
class MipModel:
    poset: Poset
    root: int
    covers: tuple[tuple[int, int], ...]
    arcs: tuple[tuple[int, int], ...]
    names: tuple[str, ...] = field(repr=False)
    in_arcs: tuple[tuple[int, ...], ...] = field(repr=False)
    out_arcs: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n(self) -> int:
        return self.poset.n

    @property
    def destinations(self) -> list[int]:
        return [k for k in range(self.n) if k != self.root]

    def cost(self, a: int) -> int:
        i, j = self.arcs[a]
        return 1 if self.poset.le[i, j] else 0

    def x(self, a: int) -> str:
        i, j = self.arcs[a]
        return f"x_{self.names[i]}_{self.names[j]}"

    def f(self, a: int, k: int) -> str:
        i, j = self.arcs[a]
        return f"f_{self.names[i]}_{self.names[j]}_{self.names[k]}"

    def arc_index(self) -> dict[tuple[int, int], int]:
        return {arc: a for a, arc in enumerate(self.arcs)}

    @property
    def num_arc_vars(self) -> int:
        return len(self.arcs)

    @property
    def num_flow_vars(self) -> int:
        return len(self.arcs) * (self.n - 1)

    @property
    def num_vars(self) -> int:
        return self.num_arc_vars + self.num_flow_vars

    def family_sizes(self) -> dict[int, int]:
        """Row counts per family from the closed-form formulas."""
        n, E = self.n, len(self.arcs)
        return {
            2: n - 1,
            3: (n - 1) * (n - 2),
            4: n - 1,
            5: sum(1 for j, _ in self.covers if j != self.root),
            6: E * (n - 1),
        }

    def objective(self) -> list[tuple[int, str]]:
        return [(1, self.x(a)) for a in range(len(self.arcs)) if self.cost(a)]

    def rows(self, family: int) -> Iterator[Row]:
        """Rows ``(name, [(coef, var)], sense, rhs)`` of one constraint family."""
        nm = self.names
        dests = self.destinations
        if family == 2:
            for j in dests:
                yield f"c2_{nm[j]}", [(1, self.f(a, j)) for a in self.in_arcs[j]], "=", 1
        elif family == 3:
            for j in dests:
                for k in dests:
                    if k == j:
                        continue
                    terms = [(1, self.f(a, k)) for a in self.in_arcs[j]]
                    terms += [(-1, self.f(a, k)) for a in self.out_arcs[j]]
                    yield f"c3_{nm[j]}_{nm[k]}", terms, "=", 0
        elif family == 4:
            for j in dests:
                yield f"c4_{nm[j]}", [(1, self.x(a)) for a in self.in_arcs[j]], "=", 1
        elif family == 5:
            for j, k in self.covers:
                if j == self.root:
                    continue
                yield f"c5_{nm[j]}_{nm[k]}", [(1, self.f(a, k)) for a in self.in_arcs[j]], "=", 1
        elif family == 6:
            for a in range(len(self.arcs)):
                for k in dests:
                    i, j = self.arcs[a]
                    yield (
                        f"c6_{nm[i]}_{nm[j]}_{nm[k]}",
                        [(1, self.f(a, k)), (-1, self.x(a))],
                        "<=",
                        0,
                    )
        else:
            raise ValueError(f"unknown constraint family {family}")

    def all_rows(self) -> Iterator[tuple[int, Row]]:
        for fam in FAMILIES:
            for row in self.rows(fam):
                yield fam, row

    def flow_names(self) -> Iterator[str]:
        for a in range(len(self.arcs)):
            for k in self.destinations:
                yield self.f(a, k)


def _lp_names(labels: tuple[str, ...]) -> tuple[str, ...]:
    # External labels are used verbatim when they are safe LP tokens and cannot
    # make two variable names collide; otherwise fall back to element ids.
    if all(_LP_NAME.match(lab) for lab in labels) and len(set(labels)) == len(labels):
        return labels
    return tuple(f"e{i}" for i in range(len(labels)))


def build_flow_model(p: Poset) -> MipModel:
    if p.root is None:
        raise UnrootedError("flow model needs a rooted poset; apply add_root first")
    n, r = p.n, p.root
    cov = cover_matrix(p.le)
    incomparable = ~(p.le | p.le.T)
    allowed = cov | incomparable
    arcs = tuple((int(i), int(j)) for i, j in np.argwhere(allowed))
    assert all(j != r for _, j in arcs), "no arc may enter the root"
    covers = tuple((int(i), int(j)) for i, j in np.argwhere(cov))
    in_arcs: list[list[int]] = [[] for _ in range(n)]
    out_arcs: list[list[int]] = [[] for _ in range(n)]
    for a, (i, j) in enumerate(arcs):
        in_arcs[j].append(a)
        out_arcs[i].append(a)
    m = MipModel(
        p, r, covers, arcs, _lp_names(p.labels),
        tuple(map(tuple, in_arcs)), tuple(map(tuple, out_arcs)),
    )
    n_incomp = int(incomparable.sum())
    assert m.num_arc_vars == len(covers) + n_incomp
    return m


def _write_terms(out: TextIO, terms, per_line: int = 8) -> None:
    for start in range(0, len(terms), per_line):
        chunk = terms[start:start + per_line]
        text = " ".join(
            ("+ " if c > 0 else "- ") + (f"{abs(c)} " if abs(c) != 1 else "") + v
            for c, v in chunk
        )
        out.write("   " + text + "\n")


def write_lp(m: MipModel, out: TextIO) -> dict[int, int]:
    """Stream the model in CPLEX LP syntax; returns rows written per family."""
    out.write(f"\\ arboreal jump number flow model: {m.n} elements, {len(m.arcs)} arcs\n")
    out.write(f"\\ root {m.poset.labels[m.root]}; arcs into the root are omitted\n")
    out.write("Maximize\n")
    out.write(" obj:\n")
    obj = m.objective()
    if obj:
        _write_terms(out, obj)
    else:
        out.write("   0 " + m.x(0) + "\n" if m.arcs else "   0\n")
    out.write("Subject To\n")
    written = {}
    for fam in FAMILIES:
        count = 0
        for name, terms, sense, rhs in m.rows(fam):
            out.write(f" {name}:\n")
            _write_terms(out, terms)
            out.write(f"   {sense} {rhs}\n")
            count += 1
        written[fam] = count
    out.write("Bounds\n")
    for name in m.flow_names():
        out.write(f" {name} >= 0\n")
    out.write("Binaries\n")
    for a in range(len(m.arcs)):
        out.write(f" {m.x(a)}\n")
    out.write("End\n")
    expected = m.family_sizes()
    assert written == expected, f"family sizes {written} differ from {expected}"
    return written


def export_lp(m: MipModel) -> str:
    buf = io.StringIO()
    write_lp(m, buf)
    return buf.getvalue()


@dataclass
class LpSummary:
    objective_vars: list[str]
    rows_by_family: dict[int, int]
    variables: set[str]
    binaries: list[str]
    bounded: list[str]

    @property
    def num_rows(self) -> int:
        return sum(self.rows_by_family.values())

    @property
    def num_flow_vars(self) -> int:
        return len(self.variables) - len(self.binaries)


_SECTIONS = {
    "maximize": "obj", "maximum": "obj", "max": "obj",
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "end": "end",
}
_TOKEN = re.compile(r"[A-Za-z_][^\s:+\-<>=*]*")


def parse_lp(text: str | Iterable[str]) -> LpSummary:
    """Read back the counts of an LP file in the dialect :func:`write_lp` emits.

    ``text`` is the whole file or any iterable of lines, such as an open file.
    """
    section = None
    obj_vars: list[str] = []
    rows: dict[int, int] = dict.fromkeys(FAMILIES, 0)
    variables: set[str] = set()
    binaries: list[str] = []
    bounded: list[str] = []
    lines = text.splitlines() if isinstance(text, str) else text
    for raw in lines:
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            continue
        if section == "obj":
            body = line.split(":", 1)[1] if ":" in line else line
            names = _TOKEN.findall(body)
            obj_vars += names
            variables.update(names)
        elif section == "rows":
            if line.endswith(":") and " " not in line:
                name = line[:-1]
                fam = int(name[1:].split("_", 1)[0]) if name.startswith("c") else 0
                rows[fam] = rows.get(fam, 0) + 1
                continue
            variables.update(_TOKEN.findall(line))
        elif section == "bounds":
            names = _TOKEN.findall(line)
            bounded += names
            variables.update(names)
        elif section == "bin":
            names = line.split()
            binaries += names
            variables.update(names)
    return LpSummary(obj_vars, rows, variables, binaries, bounded)


def read_solution(text: str) -> dict[str, float]:
    """Parse ``name value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("=", " ").split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'name value'")
        values[parts[0]] = float(parts[1])
    return values


def objective_value(m: MipModel, assignment: dict[str, float]) -> float:
    return sum(c * assignment.get(v, 0.0) for c, v in m.objective())


def assignment_from_extension(m: MipModel, ext: ArborealExtension) -> dict[str, float]:
    """Nonzero variables of the feasible point that encodes ``ext``."""
    idx = m.arc_index()
    values = {}
    for q, y in ext.arcs:
        values[m.x(idx[(q, y)])] = 1.0
    for k in m.destinations:
        u = k
        while ext.parent[u] is not None:
            q = ext.parent[u]
            values[m.f(idx[(q, u)], k)] = 1.0
            u = q
    return values


def check_assignment(m: MipModel, assignment: dict[str, float], tol: float = INT_TOL) -> None:
    """Raise :class:`InfeasibleAssignment` naming the first violated family."""
    for a in range(len(m.arcs)):
        v = assignment.get(m.x(a), 0.0)
        if min(abs(v), abs(v - 1.0)) > tol:
            raise InfeasibleAssignment(7, f"{m.x(a)} = {v} is not binary")
    for name, v in assignment.items():
        if name.startswith("f_") and v < -tol:
            raise InfeasibleAssignment(8, f"{name} = {v} is negative")
    for fam, (name, terms, sense, rhs) in m.all_rows():
        lhs = sum(c * assignment.get(var, 0.0) for c, var in terms)
        bad = lhs > rhs + tol if sense == "<=" else abs(lhs - rhs) > tol
        if bad:
            raise InfeasibleAssignment(fam, f"row {name}: {lhs:g} {sense} {rhs}")


def decode_solution(
    m: MipModel, assignment: dict[str, float], check_flows: bool = True
) -> ArborealExtension:
    """Turn a solver assignment into the arboreal extension it selects.

    With ``check_flows`` every constraint family is re-checked; without it
    only the arc variables are read and the resulting tree is validated.
    """
    if check_flows:
        check_assignment(m, assignment)
    parent: list[int | None] = [None] * m.n
    for j in m.destinations:
        chosen = [a for a in m.in_arcs[j] if assignment.get(m.x(a), 0.0) > 0.5]
        if len(chosen) != 1:
            raise InfeasibleAssignment(4, f"element {m.poset.labels[j]} has {len(chosen)} incoming arcs")
        parent[j] = m.arcs[chosen[0]][0]
    ext = ArborealExtension(m.poset, tuple(parent))
    problems = ext.problems()
    if problems:
        fam = 5 if "not implied" in problems[0] else 3
        raise InfeasibleAssignment(fam, problems[0])
    return ext


def solve_with_highs(m: MipModel, time_limit: float | None = None) -> dict[str, float]:
    """Solve the model with SciPy's HiGHS MILP interface; returns nonzero values.

    Meant for small models only, as an independent check on the formulation.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    names = [m.x(a) for a in range(len(m.arcs))] + list(m.flow_names())
    col = {v: i for i, v in enumerate(names)}
    c = np.zeros(len(names))
    for coef, v in m.objective():
        c[col[v]] = -coef
    data, ri, ci, lo, hi = [], [], [], [], []
    for r, (_, (_, terms, sense, rhs)) in enumerate(m.all_rows()):
        for coef, v in terms:
            data.append(coef)
            ri.append(r)
            ci.append(col[v])
        lo.append(-np.inf if sense == "<=" else rhs)
        hi.append(rhs)
    A = coo_matrix((data, (ri, ci)), shape=(len(lo), len(names))).tocsr()
    integrality = np.zeros(len(names))
    integrality[: len(m.arcs)] = 1
    ub = np.full(len(names), np.inf)
    ub[: len(m.arcs)] = 1
    options = {} if time_limit is None else {"time_limit": time_limit}
    res = milp(
        c, constraints=LinearConstraint(A, lo, hi), integrality=integrality,
        bounds=Bounds(np.zeros(len(names)), ub), options=options,
    )
    if res.x is None:
        raise InfeasibleAssignment(0, f"HiGHS returned no solution: {res.message}")
    return {v: float(res.x[i]) for v, i in col.items() if abs(res.x[i]) > 1e-9}
