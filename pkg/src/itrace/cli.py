"""Command-line entry point: ``itrace-bench run`` and ``itrace-bench profile``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .bench import (
    Limits,
    SolverSpec,
    export_csv,
    export_profile_csv,
    performance_profile,
    read_csv,
    run_benchmark,
)
from .errors import IoError, ItraceError
from .problems import problem_suite

RUN_DEFAULTS = {
    "solver": "itrace",
    "setting": None,
    "problems": "all",
    "time_limit_s": 60.0,
    "max_outer_iters": 100_000,
    "workers": 1,
    "out": "records.csv",
}
PROFILE_DEFAULTS = {"metric": "nf", "tau_max": 20.0, "in": None, "out": "profile.csv"}


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; blank lines and ``#`` comments are skipped."""
    cfg = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{no}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    # precedence: explicit flag, then config file, then built-in default
    file_cfg = read_config(args.config) if args.config else {}
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key)
        out[key] = flag if flag is not None else file_cfg.get(key, default)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itrace-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one solver over a set of problems")
    run.add_argument("--solver", choices=["itrace", "trace", "arc"])
    run.add_argument("--setting", type=int, choices=[1, 2, 3])
    run.add_argument("--problems", help="comma-separated names, or 'all'")
    run.add_argument("--time-limit-s", dest="time_limit_s", type=float)
    run.add_argument("--max-outer-iters", dest="max_outer_iters", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out")
    run.add_argument("--config", help="key=value file; flags take precedence")

    prof = sub.add_parser("profile", help="Dolan-Moré profile from record CSVs")
    prof.add_argument("--metric", choices=["nf", "ng", "nhv"])
    prof.add_argument("--tau-max", dest="tau_max", type=float)
    prof.add_argument("--in", dest="in", nargs="+")
    prof.add_argument("--out")
    prof.add_argument("--config")
    return parser


def _cmd_run(args) -> None:
    opt = _merge(args, RUN_DEFAULTS)
    setting = opt["setting"]
    spec = SolverSpec(opt["solver"], None if setting in (None, "") else int(setting))
    names = str(opt["problems"])
    entries = problem_suite(None if names == "all" else [p.strip() for p in names.split(",") if p.strip()])
    limits = Limits(float(opt["time_limit_s"]), int(opt["max_outer_iters"]))
    records = run_benchmark([spec], entries, limits, workers=int(opt["workers"]))
    export_csv(records, opt["out"])
    for r in records:
        print(f"{r.label:10s} {r.problem:16s} n={r.n:<4d} {r.status:12s} "
              f"iters={r.outer_iters} nf={r.n_f} ng={r.n_g} nhv={r.n_hv}")


def _cmd_profile(args) -> None:
    opt = _merge(args, PROFILE_DEFAULTS)
    paths = opt["in"]
    if not paths:
        raise ValueError("profile needs --in")
    if isinstance(paths, str):
        paths = paths.split(",")
    records = [r for p in paths for r in read_csv(p.strip())]
    curves = performance_profile(records, opt["metric"], float(opt["tau_max"]))
    export_profile_csv(curves, opt["out"])
    for c in curves:
        flag = "" if c.complete else "  (incomplete by tau_max)"
        print(f"{c.solver}: {len(c.points)} points, fraction at tau=1 is {c.points[0][1]:.3f}{flag}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            _cmd_run(args)
        else:
            _cmd_profile(args)
    except (ItraceError, ValueError) as exc:
        print(f"itrace-bench: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
