"""Benchmark harness: run the heuristics and the exact search over a set of instances."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .exact import Status, solve_exact_bb
from .extension import ArborealExtension, greedy_heuristic_algo2, minimal_extension_algo1
from .poset import Poset

METHODS = ("algo1", "algo2", "bb")
CSV_HEADER = ["instance", "exact_best", "exact_time_s", "exact_gap", "algo1_best", "heur_best", "heur_time_s"]


@dataclass
class BenchRow:
    instance: str
    n: int
    exact_best: int | None = None
    exact_time: float | None = None
    exact_gap: float | None = None  # percent
    exact_status: str | None = None
    algo1_best: int | None = None
    heuristic_best: int | None = None
    heuristic_time: float | None = None
    error: str | None = None

    @property
    def optimal(self) -> bool:
        return self.exact_status == Status.OPTIMAL.value


def _checked(ext: ArborealExtension) -> int:
    problems = ext.problems()
    if problems:
        raise AssertionError(f"invalid extension: {problems[0]}")
    return ext.jump_count


def bench_instance(name: str, p: Poset, time_limit: float, methods: Sequence[str] = METHODS) -> BenchRow:
    row = BenchRow(name, p.n)
    try:
        if "algo1" in methods:
            row.algo1_best = _checked(minimal_extension_algo1(p))
        if "algo2" in methods:
            t0 = time.perf_counter()
            ext = greedy_heuristic_algo2(p)
            row.heuristic_time = time.perf_counter() - t0
            row.heuristic_best = _checked(ext)
        if "bb" in methods:
            res = solve_exact_bb(p, time_limit)
            row.exact_status = res.status.value
            row.exact_time = res.wall_time
            if res.extension is not None:
                row.exact_best = _checked(res.extension)
                row.exact_gap = 100.0 * res.gap
    except Exception as exc:  # recorded per row so the run continues
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _bench_star(args):
    return bench_instance(*args)


def run_benchmark(
    instances: Iterable[tuple[str, Poset]],
    time_limit: float = 60.0,
    methods: Sequence[str] = METHODS,
    jobs: int = 1,
) -> list[BenchRow]:
    """One row per instance, in input order; ``jobs > 1`` runs instances in worker processes."""
    work = [(name, p, time_limit, tuple(methods)) for name, p in instances]
    if jobs <= 1 or len(work) <= 1:
        return [bench_instance(*w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_bench_star, work))


def _fmt(v, spec="") -> str:
    if v is None:
        return ""
    return format(v, spec)


def csv_records(rows: Iterable[BenchRow]) -> list[list[str]]:
    out = []
    for r in rows:
        out.append([
            r.instance,
            _fmt(r.exact_best),
            _fmt(r.exact_time, ".3f"),
            _fmt(r.exact_gap, ".2f"),
            _fmt(r.algo1_best),
            _fmt(r.heuristic_best),
            _fmt(r.heuristic_time, ".3f"),
        ])
    return out


def render_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(csv_records(rows))
    return buf.getvalue()


def render_text(rows: Sequence[BenchRow]) -> str:
    """Aligned table; ``*`` after the exact value marks a proven optimum."""
    if not rows:
        return ""
    head = ["instance", "exact", "time(s)", "gap(%)", "algo1", "heur", "heur(s)"]
    body = []
    for r, rec in zip(rows, csv_records(rows)):
        rec = list(rec)
        if r.optimal:
            rec[1] += "*"
        if r.error:
            rec.append(r.error)
        body.append(rec)
    widths = [max(len(head[i]), *(len(b[i]) for b in body)) for i in range(len(head))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip()]
    for b in body:
        cells = [c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(b, widths))]
        cells += b[len(widths):]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def write_csv(rows: Iterable[BenchRow], path: str | Path) -> None:
    Path(path).write_text(render_csv(rows))
