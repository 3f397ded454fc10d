"""Command line entry point: ``arboreal <command> ...``.

Exit codes: 0 success, 2 unreadable or malformed input, 3 infeasible or
invalid solution data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import METHODS, render_text, run_benchmark, write_csv
from .characterization import (
    certificate_to_extension,
    extension_to_certificate,
    format_certificate,
    parse_certificate,
    verify_certificate,
)
from .errors import (
    CycleError,
    FormatError,
    InfeasibleAssignment,
    InvalidCertificate,
    MalformedCertificate,
)
from .exact import brute_force_search, solve_exact_bb
from .extension import (
    format_extension,
    greedy_heuristic_algo2,
    minimal_extension_algo1,
    parse_extension,
    verify_minimality,
)
from .flowmodel import build_flow_model, decode_solution, read_solution, write_lp
from .sop import instance_stats, load_poset

EXIT_OK, EXIT_FORMAT, EXIT_INVALID = 0, 2, 3


class _Invalid(Exception):
    pass


def _load(args):
    return load_poset(args.file, getattr(args, "transpose", False))


def cmd_stats(args) -> int:
    print("instance\tn\tcovers\tincomparable\tnumvior\tnumvion")
    for f in args.files:
        name, p = load_poset(f, args.transpose)
        print("\t".join([name, *map(str, instance_stats(p))]))
    return EXIT_OK


def cmd_solve(args) -> int:
    name, p = _load(args)
    if args.method == "algo1":
        ext, status = minimal_extension_algo1(p), "Feasible"
    elif args.method == "algo2":
        ext, status = greedy_heuristic_algo2(p), "Feasible"
    elif args.method == "bb":
        res = solve_exact_bb(p, args.time_limit)
        if res.extension is None:
            print(f"# {name}: {res.status.value}, no extension found", file=sys.stderr)
            return EXIT_INVALID
        ext, status = res.extension, res.status.value
        print(f"# bound {res.best_bound}, {res.wall_time:.3f} s", file=sys.stderr)
    else:
        _, ext = brute_force_search(p, max_n=args.max_n)
        status = "Optimal"
    text = f"# {name}: {ext.jump_count} jumps ({status})\n" + format_extension(ext)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_lp(args) -> int:
    _, p = _load(args)
    m = build_flow_model(p)
    with open(args.output, "w") as fh:
        counts = write_lp(m, fh)
    print(f"{m.num_vars} variables ({m.num_arc_vars} binary), {sum(counts.values())} rows")
    return EXIT_OK


def cmd_verify(args) -> int:
    _, p = _load(args)
    if args.solution:
        m = build_flow_model(p)
        ext = decode_solution(m, read_solution(Path(args.solution).read_text()))
    elif args.extension:
        ext = parse_extension(Path(args.extension).read_text(), p)
    else:
        raise FormatError("give --extension or --solution")
    problems = ext.problems()
    if problems:
        raise _Invalid(problems[0])
    minimal = verify_minimality(ext)
    print(f"valid arboreal extension, {ext.jump_count} jumps, {'minimal' if minimal else 'not minimal'}")
    return EXIT_OK


def cmd_certify(args) -> int:
    _, p = _load(args)
    if args.certificate:
        cert = parse_certificate(Path(args.certificate).read_text(), p)
    else:
        ext = parse_extension(Path(args.extension).read_text(), p)
        problems = ext.problems()
        if problems:
            raise _Invalid(problems[0])
        cert = extension_to_certificate(ext)
    report = verify_certificate(p, cert)
    sys.stdout.write(format_certificate(p, cert))
    for prop in (1, 2, 3, 4):
        flag = getattr(report, f"property{prop}")
        state = "pass" if flag else "fail"
        extra = f"  {report.witnesses[prop]}" if prop in report.witnesses else ""
        print(f"property {prop}: {state}{extra}")
    if not report.ok:
        return EXIT_INVALID
    rebuilt = certificate_to_extension(p, cert)
    if extension_to_certificate(rebuilt) != cert:
        raise _Invalid("certificate does not survive the round trip")
    print(f"round trip: {rebuilt.jump_count} jumps from {cert.size} parts")
    return EXIT_OK


def cmd_bench(args) -> int:
    root = Path(args.dir)
    files = sorted(f for f in root.iterdir() if f.is_file()) if root.is_dir() else [root]
    instances = [load_poset(f, args.transpose) for f in files]
    rows = run_benchmark(instances, args.time_limit, args.methods.split(","), args.jobs)
    sys.stdout.write(render_text(rows))
    if args.report:
        write_csv(rows, args.report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arboreal", description="Arboreal extensions of posets with few jumps.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_file(name, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("file")
        sp.add_argument("--transpose", action="store_true", help="read -1 at (i, j) as i before j")
        return sp

    sp = sub.add_parser("stats", help="covering arcs, incomparable pairs and violations")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--transpose", action="store_true")
    sp.set_defaults(func=cmd_stats)

    sp = with_file("solve", "compute an arboreal extension")
    sp.add_argument("--method", choices=["algo1", "algo2", "bb", "oracle"], default="algo2")
    sp.add_argument("--time-limit", type=float, default=7200.0)
    sp.add_argument("--max-n", type=int, default=9, help="size cap for the oracle")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_solve)

    sp = with_file("export-lp", "write the flow model in LP format")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_export_lp)

    sp = with_file("verify", "check an extension or a solver solution file")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--extension")
    group.add_argument("--solution", help="'name value' lines for the flow model")
    sp.set_defaults(func=cmd_verify)

    sp = with_file("certify", "partition certificate of an extension, checked both ways")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--extension")
    group.add_argument("--certificate")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("bench", help="run all methods over a directory of instances")
    sp.add_argument("dir")
    sp.add_argument("--report", help="CSV output path")
    sp.add_argument("--time-limit", type=float, default=7200.0)
    sp.add_argument("--methods", default=",".join(METHODS))
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--transpose", action="store_true")
    sp.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, CycleError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (InfeasibleAssignment, InvalidCertificate, MalformedCertificate, _Invalid) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
