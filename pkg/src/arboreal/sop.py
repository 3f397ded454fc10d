"""Sequential-ordering instances (TSPLIB ``FULL_MATRIX``) read as posets.

A ``-1`` at row ``i``, column ``j`` of the weight matrix means node ``j`` must
come before node ``i``.  Weights are otherwise ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import FormatError
from .poset import (
    Poset,
    add_root,
    incomparable_pairs,
    poset_from_labeled_pairs,
    poset_from_relations,
    transitive_reduction,
    violations,
)

_HEADER = re.compile(r"^\s*([A-Z_]+)\s*:\s*(.*?)\s*$")


@dataclass(frozen=True)
class SopInstance:
    name: str
    dimension: int
    precedence_pairs: tuple[tuple[int, int], ...]


class StatRow(NamedTuple):
    n: int
    covers: int
    incomparable: int
    numvior: int
    numvion: int


def parse_sop(text: str, transpose: bool = False, name: str | None = None) -> SopInstance:
    """Parse a TSPLIB SOP file.  ``transpose`` reads ``-1`` at ``(i, j)`` as ``i`` before ``j``."""
    header: dict[str, str] = {}
    lines = text.splitlines()
    body_start = None
    for idx, raw in enumerate(lines):
        line = raw.strip()
        if not line:
            continue
        if line.upper().startswith("EDGE_WEIGHT_SECTION"):
            body_start = idx + 1
            break
        m = _HEADER.match(line)
        if m:
            header[m.group(1).upper()] = m.group(2)
    if "DIMENSION" not in header:
        raise FormatError("missing DIMENSION field")
    try:
        dim = int(header["DIMENSION"])
    except ValueError:
        raise FormatError(f"bad DIMENSION {header['DIMENSION']!r}") from None
    fmt = header.get("EDGE_WEIGHT_FORMAT", "FULL_MATRIX").upper()
    if fmt != "FULL_MATRIX":
        raise FormatError(f"unsupported EDGE_WEIGHT_FORMAT {fmt}")
    if body_start is None:
        raise FormatError("missing EDGE_WEIGHT_SECTION")
    tokens = []
    for raw in lines[body_start:]:
        line = raw.strip()
        if not line:
            continue
        if line.upper() == "EOF" or _HEADER.match(line) or line[0].isalpha():
            break
        tokens.extend(line.split())
    try:
        values = np.array([int(float(t)) for t in tokens], dtype=np.int64)
    except ValueError:
        raise FormatError("non-numeric entry in EDGE_WEIGHT_SECTION") from None
    if len(values) == dim * dim + 1 and values[0] == dim:
        values = values[1:]
    if len(values) != dim * dim:
        raise FormatError(f"expected {dim * dim} matrix entries, found {len(values)}")
    mat = values.reshape(dim, dim)
    rows, cols = np.nonzero(mat == -1)
    pairs = tuple(
        (int(i), int(j)) if transpose else (int(j), int(i))
        for i, j in zip(rows, cols) if i != j
    )
    return SopInstance(name or header.get("NAME", "").strip() or "sop", dim, pairs)


def instance_to_poset(s: SopInstance) -> Poset:
    """Close the precedences; add a root only when there is no unique start node."""
    labels = [str(i + 1) for i in range(s.dimension)]
    p = poset_from_relations(s.dimension, s.precedence_pairs, labels)
    return add_root(p)[0]


def instance_stats(p: Poset) -> StatRow:
    c = transitive_reduction(p)
    rep = violations(c)
    return StatRow(p.n, len(c.arcs), len(incomparable_pairs(p)), rep.numvior, rep.numvion)


def parse_pairs(text: str) -> Poset:
    """Plain poset format: one ``a b`` (or ``a < b``) relation per line; a lone name adds an element."""
    pairs, seen = [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].replace("<", " ").strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) > 2:
            raise FormatError(f"line {lineno}: expected 'a b' or a single element")
        seen.update(dict.fromkeys(fields))
        if len(fields) == 2:
            pairs.append((fields[0], fields[1]))
    return poset_from_labeled_pairs(pairs, list(seen))


def instance_name(path: str | Path) -> str:
    name = Path(path).name
    for suffix in (".sop", ".txt", ".poset"):
        if name.lower().endswith(suffix):
            return name[: -len(suffix)]
    return name


def load_poset(path: str | Path, transpose: bool = False) -> tuple[str, Poset]:
    """Read a SOP file or a plain pairs file and return a rooted poset."""
    text = Path(path).read_text()
    if "EDGE_WEIGHT_SECTION" in text.upper():
        p = instance_to_poset(parse_sop(text, transpose, instance_name(path)))
    else:
        p = add_root(parse_pairs(text))[0]
    return instance_name(path), p
