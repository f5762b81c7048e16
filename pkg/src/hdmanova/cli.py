"""Command-line entry point: ``hdmanova {test,fanova,simulate}``.

Exit codes: 0 on success (whether or not the null is rejected), 2 for
malformed input, 3 for degenerate data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from .datagen import scenario_build, scenario_names
from .errors import (
    BadBudget,
    DegenerateCoordinate,
    GridMismatch,
    GridTooCoarse,
    HDManovaError,
    InvalidDataset,
    NotPSD,
    UnknownScenario,
)
from .fanova import BasisSpec, CurveSet, fanova_test
from .harness import Budget, run_power, run_size, write_log
from .inference import DEFAULT_SIZE_RESAMPLES, DEFAULT_TAU_GRID, TestConfig, run_test
from .stats import Dataset, PairSet

SCHEMA_VERSION = 1
EXIT_MALFORMED = 2
EXIT_DEGENERATE = 3

log = logging.getLogger("hdmanova")


class InputError(HDManovaError):
    pass


def default_threads() -> int:
    env = os.environ.get("HDM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"HDM_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _tau_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tau must be a number or 'auto', got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def read_grouped_csv(path: str) -> tuple[list[str], list[np.ndarray], list[str]]:
    """Read a CSV with a ``group`` column followed by numeric columns.

    Returns ``(labels, groups, value_columns)`` with groups ordered by first appearance.
    """
    try:
        df = pd.read_csv(path, dtype={"group": str}, encoding="utf-8", float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if df.columns.size == 0 or df.columns[0] != "group":
        raise InputError("the first CSV column must be named 'group'")
    values = df.columns[1:]
    if values.size == 0:
        raise InputError("no value columns after 'group'")
    try:
        x = df[values].apply(pd.to_numeric, errors="raise").to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise InputError(f"non-numeric value column: {exc}") from None
    labels = list(pd.unique(df["group"]))
    keys = df["group"].to_numpy()
    groups = [x[keys == lab] for lab in labels]
    return [str(lab) for lab in labels], groups, [str(c) for c in values]


def _config(args, K: int) -> TestConfig:
    return TestConfig(
        rho=args.rho,
        tau=args.tau,
        tau_grid=args.tau_grid,
        size_resamples=args.size_resamples,
        B=args.B,
        side=args.side,
        seed=args.seed,
        pairs=PairSet.parse(args.pairs, K),
        workers=args.threads,
    )


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_test(args) -> int:
    labels, groups, _ = read_grouped_csv(args.input)
    result = run_test(Dataset(groups), _config(args, len(groups)))
    payload = {"schema_version": SCHEMA_VERSION, "command": "test", "group_labels": labels}
    payload.update(result.to_dict())
    _emit(payload, args.out)
    return 0


def cmd_fanova(args) -> int:
    labels, groups, cols = read_grouped_csv(args.input)
    m = len(cols)
    if args.grid:
        try:
            grid = np.loadtxt(args.grid, delimiter=",", ndmin=1, dtype=np.float64).ravel()
        except ValueError:
            grid = np.loadtxt(args.grid, ndmin=1, dtype=np.float64).ravel()
        if grid.size != m:
            raise GridMismatch(f"grid has {grid.size} points but the CSV has {m} curve columns")
    else:
        grid = np.linspace(0.0, 1.0, m)
    spec = BasisSpec("fourier_" + args.basis, args.p)
    result = fanova_test(CurveSet(grid, groups), spec, _config(args, len(groups)))
    payload = {"schema_version": SCHEMA_VERSION, "command": "fanova", "group_labels": labels}
    payload.update(result.to_dict())
    _emit(payload, args.out)
    return 0


def cmd_simulate(args) -> int:
    scenario = scenario_build(args.scenario)
    budget = Budget(reps=args.reps, B=args.B, tau=args.tau, rho=args.rho, seed=args.seed)
    scenario = budget.apply(scenario)
    scenario = replace(scenario, config=replace(scenario.config, tau_grid=args.tau_grid,
                                                size_resamples=args.size_resamples,
                                                side=args.side))
    if args.theta_grid:
        res = run_power(scenario, args.theta_grid, workers=args.threads)
    else:
        res = run_size(scenario, workers=args.threads)
    if args.log:
        write_log(args.log, res.records)
    payload = {"schema_version": SCHEMA_VERSION, "command": "simulate"}
    payload.update(res.to_dict())
    _emit(payload, args.out)
    print(f"{res.scenario}: rejection rate {res.rejection_rate:.3f} (se {res.mc_se:.3f}), "
          f"{res.seconds_per_rep:.3f} s/replicate", file=sys.stderr)
    return 0


def _add_test_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, default=0.05, help="significance level")
    p.add_argument("--tau", type=_tau_arg, default="auto", help="partial standardization in [0,1) or 'auto'")
    p.add_argument("--tau-grid", type=_float_list, default=DEFAULT_TAU_GRID,
                   help="candidates for --tau auto (comma-separated)")
    p.add_argument("--size-resamples", type=int, default=DEFAULT_SIZE_RESAMPLES,
                   help="resampled datasets per candidate when estimating size")
    p.add_argument("--B", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", choices=("two_sided", "upper", "lower"), default="two_sided")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: HDM_THREADS or CPU count)")
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdmanova", description="High-dimensional ANOVA by bootstrapping max statistics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test equality of group mean vectors from a CSV")
    p.add_argument("input", help="CSV: 'group' column then p numeric columns")
    p.add_argument("--pairs", default="all", help="'all' or e.g. '1-2,3-4'")
    _add_test_options(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("fanova", help="functional ANOVA on curves sampled on a shared grid")
    p.add_argument("input", help="CSV: 'group' column then t_1..t_m curve values")
    p.add_argument("--grid", help="file with the m grid points (default: equally spaced on [0,1])")
    p.add_argument("--basis", choices=("raw", "orthonormal"), default="raw")
    p.add_argument("--p", type=int, default=51, help="number of basis functions")
    p.add_argument("--pairs", default="all")
    _add_test_options(p)
    p.set_defaults(func=cmd_fanova)

    p = sub.add_parser("simulate", help="Monte-Carlo size or power for a catalog scenario")
    p.add_argument("--scenario", required=True, help="one of: " + ", ".join(scenario_names()))
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--theta-grid", type=_float_list, default=None,
                   help="comma-separated thetas (must include 0); omit for a size run")
    p.add_argument("--log", help="JSON-lines replicate log path")
    _add_test_options(p)
    p.set_defaults(func=cmd_simulate, tau=0.8)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            args.threads = default_threads()
        return args.func(args)
    except (DegenerateCoordinate, NotPSD) as exc:
        print(f"error: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, InvalidDataset, GridMismatch, GridTooCoarse, UnknownScenario, BadBudget,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
