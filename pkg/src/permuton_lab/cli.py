"""Command-line entry point: ``permuton-lab <command> [options]``.

Exit status is 0 on success, 1 on a usage error and 2 when a deterministic
invariant or a statistical check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from contextlib import contextmanager
from typing import Iterable, Sequence

import numpy as np

from .densities import FAMILY_GRAMMAR, DiagonalPower, parse_family
from .errors import InvariantViolation, PermutonLabError
from .gridcheck import sandwich_check
from .lis import lis_points
from .samplers import RngStream, sample_set
from .stats import (
    EstimateRecord,
    concentration_check,
    default_lambdas,
    estimate,
    fit_exponent,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
THREADS_ENV = "PERMUTON_LAB_THREADS"
N_GRID_GRAMMAR = "start:stop:geometric[:points]"

SEED_HELP = (
    "base seed; replicate r of any experiment draws from the stream "
    "SeedSequence(seed, spawn_key=(r,)), so results do not depend on --threads"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def parse_n_grid(text: str) -> list[int]:
    """``start:stop:geometric`` doubles from start; ``:points`` spaces evenly in log N."""
    parts = text.split(":")
    if len(parts) not in (3, 4) or parts[2] != "geometric":
        raise UsageError(f"bad --n-grid {text!r}; expected {N_GRID_GRAMMAR}")
    try:
        start, stop = int(parts[0]), int(parts[1])
        points = int(parts[3]) if len(parts) == 4 else None
    except ValueError:
        raise UsageError(f"bad --n-grid {text!r}; expected {N_GRID_GRAMMAR}") from None
    if start < 1 or stop < start or (points is not None and points < 1):
        raise UsageError(f"bad --n-grid {text!r}; need 1 <= start <= stop and points >= 1")
    if points is None:
        out = []
        n = start
        while n <= stop:
            out.append(n)
            n *= 2
        return out
    if points == 1:
        return [start]
    grid = np.rint(np.geomspace(start, stop, points)).astype(np.int64)
    return sorted({int(v) for v in grid})


def parse_lambdas(text: str) -> list[float]:
    try:
        lams = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --lambdas {text!r}; expected comma-separated non-negative reals") from None
    if not lams or any(not math.isfinite(v) or v < 0 for v in lams):
        raise UsageError(f"bad --lambdas {text!r}; expected comma-separated non-negative reals")
    return lams


def _family(text: str | None):
    if not text:
        raise UsageError(f"--family is required; expected {FAMILY_GRAMMAR}")
    try:
        return parse_family(text)
    except ValueError as exc:
        raise UsageError(f"--family: {exc}") from None


def _sizes(args) -> list[int]:
    if args.n_grid:
        return parse_n_grid(args.n_grid)
    if args.n is None:
        raise UsageError("one of --n or --n-grid is required")
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    return [args.n]


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def write_rows(rows: Iterable[dict], columns: Sequence[str], path: str, as_json: bool) -> None:
    with _open_out(path) as fh:
        if as_json:
            for row in rows:
                fh.write(json.dumps({c: _jsonable(row[c]) for c in columns}) + "\n")
            return
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


ESTIMATE_COLUMNS = ("family", "N", "replicates", "mean_lis", "std_lis", "stderr", "seed")
FIT_COLUMNS = ("family", "exponent", "log_coeff", "intercept", "r_squared", "n_points")
GRID_COLUMNS = ("N", "alpha", "b", "lower", "lis", "upper", "chain_cap", "seed")
CONCENTRATION_COLUMNS = (
    "family", "N", "lambda", "empirical_tail", "mcdiarmid", "talagrand_up", "talagrand_down", "median",
)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    fam = _family(args.family)
    if args.n is None or args.n < 1:
        raise UsageError("--n (>= 1) is required for sample")
    ps = sample_set(fam, args.n, RngStream(args.seed, 0))
    cols = ["x", "y"]
    extra = {}
    if args.emit_witness:
        wit = lis_points(ps, witness=True).witness
        mark = np.zeros(len(ps), dtype=bool)
        mark[list(wit)] = True
        extra["in_lis"] = mark
        cols.append("in_lis")
    rows = (
        {"x": float(x), "y": float(y), **{k: bool(v[i]) for k, v in extra.items()}}
        for i, (x, y) in enumerate(zip(ps.xs, ps.ys))
    )
    if args.json:
        write_rows(rows, cols, args.out, True)
    else:
        with _open_out(args.out) as fh:
            ps.to_csv(fh, extra)
    return EXIT_OK


def _estimates(args, fam) -> list[EstimateRecord]:
    if args.replicates < 2:
        raise UsageError("--replicates must be >= 2")
    return [estimate(fam, N, args.replicates, args.seed, args.threads) for N in _sizes(args)]


def cmd_estimate(args) -> int:
    recs = _estimates(args, _family(args.family))
    write_rows((r.row() for r in recs), ESTIMATE_COLUMNS, args.out, args.json)
    return EXIT_OK


def _read_estimates(path: str) -> list[EstimateRecord]:
    recs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            recs.append(
                EstimateRecord(
                    parse_family(row["family"]),
                    int(row["N"]),
                    int(row["replicates"]),
                    float(row["mean_lis"]),
                    float(row["std_lis"]),
                    float(row["stderr"]),
                    int(row["seed"]),
                )
            )
    return recs


def cmd_fit(args) -> int:
    if args.input:
        try:
            recs = _read_estimates(args.input)
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"--input: cannot read estimates from {args.input!r}: {exc}") from None
    else:
        recs = _estimates(args, _family(args.family))
    res = fit_exponent(recs, args.with_log_correction)
    write_rows([res.row()], FIT_COLUMNS, args.out, args.json)
    return EXIT_OK


def cmd_grid_check(args) -> int:
    fam = _family(args.family)
    alpha = args.alpha
    if alpha is None:
        alpha = fam.alpha if isinstance(fam, DiagonalPower) else -0.5
    rows = []
    for N in _sizes(args):
        for r in range(args.replicates):
            ps = sample_set(fam, N, RngStream(args.seed, r))
            rows.append(sandwich_check(ps, alpha).row(seed=args.seed))
    write_rows(rows, GRID_COLUMNS, args.out, args.json)
    return EXIT_OK


def cmd_concentration(args) -> int:
    fam = _family(args.family)
    if args.replicates < 2:
        raise UsageError("--replicates must be >= 2")
    lams = parse_lambdas(args.lambdas) if args.lambdas else None
    rows = []
    violations = []
    for N in _sizes(args):
        rep = concentration_check(fam, N, args.replicates, lams or default_lambdas(N), args.seed, args.threads)
        rows.extend(rep.csv_rows())
        violations.extend(rep.violations)
    write_rows(rows, CONCENTRATION_COLUMNS, args.out, args.json)
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_FAILED if violations else EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SuiteConfig, run_suite

    if args.suite == "primary":
        cfg = SuiteConfig(seed=args.seed, threads=args.threads)
    else:
        cfg = SuiteConfig.smoke(seed=args.seed, threads=args.threads)
    only = None
    if args.only:
        try:
            only = {int(v) for v in args.only.split(",")}
        except ValueError:
            raise UsageError(f"bad --only {args.only!r}; expected comma-separated criterion numbers") from None

    with _open_out(args.out) as fh:
        def report(res):
            if args.json:
                fh.write(json.dumps(res.row()) + "\n")
            else:
                fh.write(res.line() + "\n")
                for d in res.details:
                    fh.write(f"    {d}\n")
            fh.flush()

        results = run_suite(cfg, only, report)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "fit": cmd_fit,
    "grid-check": cmd_grid_check,
    "concentration": cmd_concentration,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="permuton-lab",
        description="Sample random permutations from planar densities and study their LIS.",
        epilog=f"family grammar: {FAMILY_GRAMMAR}",
    )
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def common(sp, sizes=True, family=True):
        if family:
            sp.add_argument("--family", help=f"density family: {FAMILY_GRAMMAR}")
        if sizes:
            sp.add_argument("--n", type=int, help="number of points")
            sp.add_argument("--n-grid", help=f"sizes as {N_GRID_GRAMMAR}")
        sp.add_argument("--seed", type=int, default=0, help=SEED_HELP)
        sp.add_argument("--out", default="-", help="output path, '-' for standard output")
        sp.add_argument("--json", action="store_true", help="write JSON lines instead of CSV")
        sp.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
        sp.add_argument("--config", help="JSON file of option defaults; command-line flags win")

    sp = sub.add_parser("sample", help="draw one point set")
    common(sp)
    sp.add_argument("--emit-witness", action="store_true", help="add an in_lis column marking one longest chain")

    sp = sub.add_parser("estimate", help="Monte Carlo mean LIS per N")
    common(sp)
    sp.add_argument("--replicates", type=int, default=64)

    sp = sub.add_parser("fit", help="fit the growth exponent of mean LIS")
    common(sp)
    sp.add_argument("--replicates", type=int, default=64)
    sp.add_argument("--input", help="estimates CSV to fit instead of simulating")
    sp.add_argument("--with-log-correction", action="store_true", help="add a log log N regressor")

    sp = sub.add_parser("grid-check", help="grid lower/upper bounds around LIS")
    common(sp)
    sp.add_argument("--replicates", type=int, default=1, help="point sets per N")
    sp.add_argument("--alpha", type=float, default=None, help="grid exponent (default: family alpha or -0.5)")

    sp = sub.add_parser("concentration", help="empirical LIS tails against concentration bounds")
    common(sp)
    sp.add_argument("--replicates", type=int, default=10_000)
    sp.add_argument("--lambdas", help="comma-separated deviations (default: multiples of sqrt(N))")

    sp = sub.add_parser("verify", help="run the acceptance suite")
    common(sp, sizes=False, family=False)
    sp.add_argument("--suite", choices=("primary", "smoke"), default="primary")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("permuton-lab: a command is required")
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--config: cannot read {args.config!r}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("--config: expected a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"--config: unknown option {key!r} for {args.command}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.threads is None:
            args.threads = _default_threads()
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (PermutonLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
