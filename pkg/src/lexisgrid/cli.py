"""Command line interface.

Exit codes: 0 success, 1 data / validation / configuration error, 2 usage
error.  Failures print one line ``lexisgrid: <kind>: <message>`` to stderr.
"""
from __future__ import annotations

import argparse
import sys
import time

from . import _backend
from .batch import segment_arrays, traverse_arrays, traverse_segments
from .cohort import HazardSpec, SimConfig, simulate_cohort
from .core import GridSpec, oracle_deviation
from .errors import LexisError
from .exposure import RiskSemantics, accumulate, bin_events, rates, risk_segments
from .io import read_cohort, read_table, write_cohort, write_table

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2

REFERENCE_BENCH_SECONDS = 92.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(kind, message, code):
    print(f"lexisgrid: {kind}: {message}", file=sys.stderr)
    return code


def _grid(args):
    return GridSpec(args.t_r, args.dim, tuple(args.origin))


def _add_grid_flags(p, dim_default=None):
    p.add_argument("--t-r", dest="t_r", type=float, required=True, help="voxel edge length")
    if dim_default is None:
        p.add_argument("--dim", type=int, choices=(2, 3), required=True)
    else:
        p.add_argument("--dim", type=int, choices=(2, 3), default=dim_default)
    p.add_argument("--origin", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar=("T", "A", "D"))


def build_parser():
    parser = _Parser(prog="lexisgrid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="generate a synthetic diseased cohort")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--beta0", type=float, default=-10.0)
    p.add_argument("--beta1", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--entry-age", type=float, nargs=2, default=(55.0, 80.0), metavar=("LO", "HI"))
    p.add_argument("--birth", type=float, nargs=2, default=(0.0, 15.0), metavar=("LO", "HI"))
    p.add_argument("--duration", type=float, nargs=2, default=(3.0, 15.0), metavar=("LO", "HI"))
    p.add_argument("--step", type=float, default=0.01, help="quadrature step")
    p.add_argument("--max-followup", type=float, default=60.0)
    p.add_argument(
        "--legacy-discretization",
        action="store_true",
        help="whole-unit inverse CDF with +-0.5 jitter and 3-decimal rounding",
    )

    for name, what in (("exposure", "person-time"), ("events", "event counts")):
        p = sub.add_parser(name, help=f"{what} per voxel from a cohort CSV")
        p.add_argument("--cohort", required=True)
        _add_grid_flags(p)
        p.add_argument("--semantics", required=True, choices=[s.value for s in RiskSemantics])
        p.add_argument("--out", required=True)
        if name == "exposure":
            p.add_argument("--backend", choices=("compiled", "python"), default=None)

    p = sub.add_parser("rates", help="events / person-time per voxel")
    p.add_argument("--exposure", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="compare traversal with slab clipping on every segment")
    p.add_argument("--cohort", required=True)
    _add_grid_flags(p, dim_default=3)
    p.add_argument("--tolerance", type=float, default=1e-9, help="relative to the longest segment")

    p = sub.add_parser("bench", help="time the traversal of a synthetic cohort")
    p.add_argument("--n", type=int, default=100_000)
    _add_grid_flags(p, dim_default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--backend", choices=("compiled", "python", "both"), default=None)
    p.add_argument("--repeat", type=int, default=3, help="report the fastest of this many runs")
    return parser


def cmd_simulate(args):
    spec = HazardSpec(args.beta0, args.beta1, args.gamma)
    config = SimConfig(
        n_subjects=args.n,
        seed=args.seed,
        entry_age_range=tuple(args.entry_age),
        birth_range=tuple(args.birth),
        duration_range=tuple(args.duration),
        integration_step=args.step,
        max_followup=args.max_followup,
        legacy_discretization=args.legacy_discretization,
    )
    records = simulate_cohort(config, spec)
    write_cohort(records, args.out)
    censored = sum(not r.event_at_exit for r in records)
    print(f"simulated {len(records)} subjects ({censored} censored at max follow-up) -> {args.out}")


def cmd_exposure(args):
    cohort = read_cohort(args.cohort)
    table = accumulate(cohort, _grid(args), args.semantics, backend=args.backend)
    write_table(table, args.out)
    print(f"exposure: {len(table.values)} voxels, person-time {table.total():.17g} -> {args.out}")


def cmd_events(args):
    cohort = read_cohort(args.cohort)
    table = bin_events(cohort, _grid(args), args.semantics)
    write_table(table, args.out)
    print(f"events: {len(table.counts)} voxels, {table.total()} events -> {args.out}")


def cmd_rates(args):
    table = rates(read_table(args.exposure), read_table(args.events))
    write_table(table, args.out)
    print(f"rates: {len(table.entries)} voxels -> {args.out}")


def cmd_validate(args):
    grid = _grid(args)
    cohort = read_cohort(args.cohort)
    segments = [seg for s in RiskSemantics for r in cohort for seg in risk_segments(r, s)]
    results = traverse_segments(segments, grid)
    worst = 0.0
    longest = 0.0
    for seg, res in zip(segments, results):
        worst = max(worst, oracle_deviation(seg, res, grid))
        longest = max(longest, seg.delta_t)
    limit = args.tolerance * longest
    ok = worst <= limit
    print(
        f"segments={len(segments)} max_deviation={worst:.3e} tolerance={limit:.3e} "
        f"status={'ok' if ok else 'FAIL'}"
    )
    if not ok:
        return _fail("validation-error", f"traversal deviates from slab oracle by {worst:.3e}", EXIT_DATA)
    return EXIT_OK


def cmd_bench(args):
    grid = _grid(args)
    cohort = simulate_cohort(SimConfig(n_subjects=args.n, seed=args.seed))
    segments = [seg for r in cohort for seg in risk_segments(r, RiskSemantics.POST_ONSET)]
    arrays = segment_arrays(segments)
    if args.backend == "both":
        backends = ["compiled", "python"]
    else:
        backends = [args.backend or _backend.BACKEND]
    timings = {}
    for name in backends:
        best = float("inf")
        for _ in range(max(1, args.repeat)):
            t0 = time.perf_counter()
            seg, _, _ = traverse_arrays(*arrays, grid, backend=name)
            best = min(best, time.perf_counter() - t0)
        timings[name] = best
        print(
            f"backend={name} segments={len(segments)} voxel_entries={len(seg)} seconds={best:.4f} "
            f"segments_per_second={len(segments) / best:.0f} speedup_vs_92s={REFERENCE_BENCH_SECONDS / best:.1f}"
        )
    if len(timings) == 2:
        print(f"compiled_speedup={timings['python'] / timings['compiled']:.1f}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "exposure": cmd_exposure,
    "events": cmd_events,
    "rates": cmd_rates,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return _fail("usage-error", str(exc), EXIT_USAGE)
    try:
        code = COMMANDS[args.command](args)
    except LexisError as exc:
        return _fail(f"{type(exc).__name__}", str(exc), EXIT_DATA)
    except OSError as exc:
        return _fail("io-error", f"{exc.filename or ''}: {exc.strerror or exc}", EXIT_DATA)
    except RuntimeError as exc:
        return _fail("runtime-error", str(exc), EXIT_DATA)
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
