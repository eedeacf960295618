"""Command-line front end.

Exit codes: 0 success, 2 input or validation error, 3 solver error,
4 property violation (cut-check, selftest).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from pathlib import Path

from . import io
from .core import EXACT_LIMIT, MAX_EXACT_LIMIT, capacity, default_workers
from .errors import EHZError, ValidationError
from .experiments import CUT_TOL, cut_check, format_table, random_center_cuts
from .geometry import make_box, make_cross_polytope, make_cube, make_random_polytope, make_simplex

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_PROPERTY = 4

logger = logging.getLogger("ehzcap")


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _solve(args, mode):
    K = io.load_polytope(args.inp)
    return capacity(
        K, mode=mode, exact_limit=args.exact_limit, workers=args.workers, seed=args.seed,
    )


def cmd_capacity(args, mode=None) -> int:
    res = _solve(args, mode or args.mode)
    _emit(io.dumps(io.result_to_dict(res, timing=args.timing)), args.out)
    return EXIT_OK


def cmd_orbit(args) -> int:
    res = _solve(args, args.mode)
    if args.format == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        pts = res.orbit.loop.breakpoints()
        writer.writerow([f"x{k}" for k in range(pts.shape[1])])
        for p in pts:
            writer.writerow([f"{x:.12g}" for x in p])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(io.dumps(io.orbit_to_dict(res.orbit)), args.out)
    return EXIT_OK


def cmd_cut_check(args) -> int:
    K = io.load_polytope(args.inp)
    cuts = io.load_cuts(args.cuts) if args.cuts else random_center_cuts(K, args.count, seed=args.seed)
    rows = cut_check(K, cuts, mode=args.mode, exact_limit=args.exact_limit, workers=args.workers)
    tol = CUT_TOL if args.tol is None else args.tol
    _emit(format_table(rows, tol), args.out)
    return EXIT_OK if all(r.holds(tol) for r in rows) else EXIT_PROPERTY


def cmd_gen(args) -> int:
    if args.kind == "cube":
        K = make_cube(args.n, args.r)
    elif args.kind == "cross":
        K = make_cross_polytope(args.n, args.r)
    elif args.kind == "simplex":
        K = make_simplex(args.n)
    elif args.kind == "unit-box":
        K = make_box([0.0] * (2 * args.n), [1.0] * (2 * args.n))
    else:
        K = make_random_polytope(args.n, args.facets, seed=args.seed)
    _emit(io.dumps(io.polytope_to_dict(K)), args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run

    results = run(quick=args.quick)
    lines = []
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        extra = f"  {r.message}" if r.message else ""
        lines.append(f"{status} {r.name} ({r.seconds:.1f}s){extra}")
    failed = sum(not r.ok for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if failed == 0 else EXIT_PROPERTY


def _exact_limit(text: str) -> int:
    v = int(text)
    if not 1 <= v <= MAX_EXACT_LIMIT:
        raise argparse.ArgumentTypeError(f"exact limit must be between 1 and {MAX_EXACT_LIMIT}")
    return v


def _workers(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("worker count must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=_workers, default=None, help="default: $EHZ_WORKERS or 1")
    common.add_argument("--exact-limit", type=_exact_limit, default=EXACT_LIMIT)
    common.add_argument("--tol", type=float, default=None, help="tolerance override")
    common.add_argument("-v", "--verbose", action="store_true")

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--in", dest="inp", required=True, help="polytope JSON file")
    solve.add_argument("--timing", action="store_true", help="include wall time in the output")

    parser = argparse.ArgumentParser(prog="ehzcap", description="EHZ capacity of convex polytopes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", parents=[common, solve], help="capacity with optimizer and orbit")
    p.add_argument("--mode", choices=["exact", "heuristic", "symmetric", "pruned"], default="exact")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("symmetric", parents=[common, solve], help="centrally symmetric search")
    p.set_defaults(func=lambda a: cmd_capacity(a, "symmetric"))

    p = sub.add_parser("pruned", parents=[common, solve], help="transition-graph cycle search")
    p.set_defaults(func=lambda a: cmd_capacity(a, "pruned"))

    p = sub.add_parser("orbit", parents=[common, solve], help="closed characteristic only")
    p.add_argument("--mode", choices=["exact", "symmetric", "pruned"], default="exact")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("cut-check", parents=[common], help="subadditivity under hyperplane cuts")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--cuts", help='JSON file {"cuts": [{"normal": [...], "offset": c}]}')
    p.add_argument("--count", type=int, default=10, help="random cuts when --cuts is absent")
    p.add_argument("--mode", choices=["exact", "symmetric", "pruned"], default="exact")
    p.set_defaults(func=cmd_cut_check)

    p = sub.add_parser("gen", parents=[common], help="write a generator polytope")
    p.add_argument("kind", choices=["cube", "cross", "simplex", "unit-box", "random"])
    p.add_argument("--n", type=int, default=1, help="half dimension")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--facets", type=int, default=6)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    p.add_argument("--quick", action="store_true", help="planar checks only")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.workers is None:
        args.workers = default_workers()
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EHZError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
