"""Scoring-streak models for carom billiards, from the command line.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or invalid
score sheet), 3 infeasible triple or failed fit.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .analysis import dedimensionalize
from .errors import (
    CaromarkovError,
    ConvergenceError,
    DegenerateFitError,
    DivergenceError,
    InfeasibleError,
    ParseError,
    ValidationError,
)
from .fitting import fit_histogram
from .ingest import composite, empirical_survival, format_histogram, mean_score, read_histogram
from .models import MarkovModel, eigen2, markov_mean
from .recovery import DEFAULT_GRID, feasible_region
from .simulate import DEFAULT_SURFACE_GRID, opponent_surface, simulate_histogram

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _emit(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _prob(name, value, closed_hi=True):
    if not (0.0 <= value <= 1.0 if closed_hi else 0.0 <= value < 1.0):
        raise UsageError(f"--{name} must lie in [0, 1], got {value}")


def _matrix(args):
    k = np.array(args.matrix, dtype=float).reshape(2, 2)
    if np.any(k < 0) or np.any(k.sum(axis=0) > 1.0):
        raise UsageError("--matrix needs non-negative entries with column sums <= 1")
    return k


def cmd_fit(args):
    h = read_histogram(args.input)
    try:
        report = fit_histogram(h)
    except DegenerateFitError as exc:
        fb = exc.fallback
        out = {
            "m": mean_score(h),
            "lambda": fb.lam,
            "degenerate": True,
            "effectively_bernoullian": True,
            "n_used": empirical_survival(h).max,
            "error": str(exc),
        }
        _emit(_dump(out), args.output)
        print(f"caromarkov fit: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(_dump(report.to_dict()), args.output)
    return EXIT_OK


def cmd_recover(args):
    if args.matrix is not None:
        k = _matrix(args)
        _prob("matrix-p0", args.matrix_p0)
        e = eigen2(k)
        rho1, rho2 = e.rho1, e.rho2
        m = markov_mean(MarkovModel.two_type(k, args.matrix_p0))
    else:
        if args.rho1 is None or args.rho2 is None or args.m is None:
            raise UsageError("give --rho1, --rho2 and --m, or --matrix")
        rho1, rho2, m = args.rho1, args.rho2, args.m
    if not 0.0 < rho1 < rho2 < 1.0:
        raise UsageError(f"need 0 < rho1 < rho2 < 1, got rho1={rho1}, rho2={rho2}")
    if m <= 0.0:
        raise UsageError("--m must be positive")
    if args.grid < 100:
        raise UsageError("--grid must be at least 100")
    p0 = None if args.sweep_p0 else args.p0
    if p0 is not None:
        _prob("p0", p0)
    try:
        region = feasible_region(
            rho1, rho2, m, p0=p0, grid=args.grid, difficult_first=not args.all_labels
        )
    except (InfeasibleError, ValidationError) as exc:
        _emit(_dump({"rho1": rho1, "rho2": rho2, "m": m, "feasible": False, "error": str(exc)}), args.output)
        print(f"caromarkov recover: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if args.format == "text":
        _emit(region.text(), args.output)
    else:
        _emit(_dump({**region.to_dict(), "feasible": True}), args.output)
    return EXIT_OK


def cmd_simulate(args):
    k = _matrix(args)
    _prob("p0", args.p0)
    if args.innings < 1:
        raise UsageError("--innings must be >= 1")
    try:
        mm = MarkovModel.two_type(k, args.p0)
    except DivergenceError as exc:
        raise UsageError(str(exc)) from None
    h = simulate_histogram(mm, args.innings, seed=args.seed)
    if args.format == "json":
        out = {
            "innings": h.total_innings,
            "seed": args.seed,
            "mean": mean_score(h),
            "histogram": [[s, c] for s, c in h.entries.items()],
        }
        _emit(_dump(out), args.output)
    else:
        _emit(format_histogram(h), args.output)
    return EXIT_OK


def cmd_surface(args):
    if not 0.0 < args.rho1 < args.rho2 < 1.0:
        raise UsageError("need 0 < rho1 < rho2 < 1")
    _prob("p0", args.p0)
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    if args.dk_min >= args.dk_max:
        raise UsageError("--dk-min must be below --dk-max")
    rng = (args.dk_min, args.dk_max)
    surface = opponent_surface(args.rho1, args.rho2, args.p0, rng, rng, args.grid)
    _emit(surface.to_csv(), args.output)
    return EXIT_OK


def cmd_dedim(args):
    h = read_histogram(args.input)
    m = mean_score(h)
    lam = args.lam if args.lam is not None else m / (m + 1.0)
    if not 0.0 < lam < 1.0:
        if args.lam is not None:
            raise UsageError("--lam must lie strictly in (0, 1)")
        raise ValidationError("score sheet average is zero: cannot rescale")
    _emit(dedimensionalize(empirical_survival(h), lam).to_csv(), args.output)
    return EXIT_OK


def cmd_composite(args):
    h = composite(read_histogram(p) for p in args.inputs)
    _emit(format_histogram(h), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="caromarkov", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out(sp):
        sp.add_argument("-o", "--output", help="write here instead of stdout")

    sp = sub.add_parser("fit", help="fit Bernoulli and Markov curves to a score sheet")
    sp.add_argument("input", help="score sheet: 'score count' per line")
    out(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("recover", help="bound the entries of K from (rho1, rho2, m)")
    sp.add_argument("--rho1", type=float)
    sp.add_argument("--rho2", type=float)
    sp.add_argument("--m", type=float, help="average points per inning")
    sp.add_argument("--matrix", type=float, nargs=4, metavar=("K11", "K12", "K21", "K22"),
                    help="derive the triple from this matrix instead")
    sp.add_argument("--matrix-p0", type=float, default=0.5,
                    help="p0 used with --matrix to compute m (default 0.5)")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--p0", type=float, default=0.5, help="fixed p0 (default 0.5)")
    grp.add_argument("--sweep-p0", action="store_true", help="sweep p0 over [0, 1]")
    sp.add_argument("--grid", type=int, default=DEFAULT_GRID)
    sp.add_argument("--all-labels", action="store_true",
                    help="also keep matrices where type 1 is the easier shot")
    sp.add_argument("--format", choices=("json", "text"), default="json")
    out(sp)
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("simulate", help="simulate innings from a two-type model")
    sp.add_argument("--matrix", type=float, nargs=4, required=True, metavar=("K11", "K12", "K21", "K22"))
    sp.add_argument("--p0", type=float, default=0.5)
    sp.add_argument("--innings", type=int, required=True)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--format", choices=("sheet", "json"), default="sheet")
    out(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("surface", help="average over the (dk1, dk2) plane as CSV")
    sp.add_argument("--rho1", type=float, required=True)
    sp.add_argument("--rho2", type=float, required=True)
    sp.add_argument("--p0", type=float, required=True)
    sp.add_argument("--grid", type=int, default=DEFAULT_SURFACE_GRID)
    sp.add_argument("--dk-min", type=float, default=-1.0)
    sp.add_argument("--dk-max", type=float, default=1.0)
    out(sp)
    sp.set_defaults(func=cmd_surface)

    sp = sub.add_parser("dedim", help="rescaled survival curve (nu, mu) as CSV")
    sp.add_argument("input")
    sp.add_argument("--lam", type=float, help="default: m / (m + 1) from the sheet")
    out(sp)
    sp.set_defaults(func=cmd_dedim)

    sp = sub.add_parser("composite", help="pool score sheets into one")
    sp.add_argument("inputs", nargs="+")
    out(sp)
    sp.set_defaults(func=cmd_composite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"caromarkov {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError, OSError, UnicodeDecodeError) as exc:
        print(f"caromarkov {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleError, ConvergenceError, DegenerateFitError, DivergenceError) as exc:
        print(f"caromarkov {args.command}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CaromarkovError as exc:
        print(f"caromarkov {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
