"""Batch runs, CSV records and Dolan-Moré performance profiles."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

from .baselines import ArcConfig, arc_solve, trace_solve
from .errors import EmptyComparison, IoError, ItraceError
from .problems import SuiteEntry, get_problem, problem_suite
from .solver import ItraceConfig, SolveResult, itrace_solve

SOLVERS = ("itrace", "trace", "arc")
RECORD_COLUMNS = (
    "solver", "setting", "problem", "n", "status", "f_final", "g_norm_final",
    "n_f", "n_g", "n_hv", "outer_iters", "wall_time_s",
)
PROFILE_COLUMNS = ("solver", "tau", "fraction")
METRIC_ALIASES = {"nf": "n_f", "ng": "n_g", "nhv": "n_hv", "n_f": "n_f", "n_g": "n_g", "n_hv": "n_hv"}


@dataclass(frozen=True)
class Limits:
    time_limit_s: Optional[float] = 60.0
    max_outer_iters: int = 100_000


@dataclass(frozen=True)
class SolverSpec:
    """A solver name plus experimental setting (1, 2 or 3; ignored by trace)."""

    name: str
    setting: Optional[int] = None

    def __post_init__(self):
        if self.name not in SOLVERS:
            raise ValueError(f"unknown solver {self.name!r}; choose from {SOLVERS}")
        if self.setting is not None and self.setting not in (1, 2, 3):
            raise ValueError(f"setting must be 1, 2 or 3, got {self.setting!r}")

    @property
    def label(self) -> str:
        return self.name if self.setting is None else f"{self.name}-{self.setting}"

    def runner(self, limits: Limits) -> Callable:
        lim = {"time_limit_s": limits.time_limit_s, "max_outer_iters": limits.max_outer_iters}
        if self.name == "arc":
            cfg = ArcConfig.for_setting(self.setting or 2, **lim)
            return lambda oracle: arc_solve(oracle, config=cfg)
        cfg = ItraceConfig.for_setting(self.setting or 2, **lim)
        solve = itrace_solve if self.name == "itrace" else trace_solve
        return lambda oracle: solve(oracle, config=cfg)


@dataclass
class RunRecord:
    solver: str
    setting: Optional[int]
    problem: str
    n: int
    status: str
    f_final: float
    g_norm_final: float
    n_f: int
    n_g: int
    n_hv: int
    outer_iters: int
    wall_time_s: float
    result: Optional[SolveResult] = field(default=None, repr=False, compare=False)

    @property
    def label(self) -> str:
        return self.solver if self.setting is None else f"{self.solver}-{self.setting}"

    @property
    def converged(self) -> bool:
        return self.status == "Converged"


def _as_entry(p: Union[SuiteEntry, str, tuple]) -> SuiteEntry:
    if isinstance(p, SuiteEntry):
        return p
    if isinstance(p, str):
        return next(e for e in problem_suite([p]))
    name, n = p
    get_problem(name, n)  # fail early on unknown names or bad sizes
    return SuiteEntry(name, n, "", lambda m, name=name: get_problem(name, m))


def run_one(spec: SolverSpec, entry: SuiteEntry, limits: Limits = Limits(), keep_result: bool = False) -> RunRecord:
    try:
        res = spec.runner(limits)(entry.build())
    except ItraceError as exc:
        nan = math.nan
        return RunRecord(spec.name, spec.setting, entry.name, entry.n, f"Error({type(exc).__name__})",
                         nan, nan, 0, 0, 0, 0, 0.0)
    c = res.counters
    return RunRecord(
        spec.name, spec.setting, entry.name, entry.n, res.status, float(res.f), float(res.g_norm),
        c.n_f, c.n_g, c.n_hv, res.n_iters, res.wall_time_s, res if keep_result else None,
    )


def run_benchmark(
    solver_specs: Sequence[SolverSpec],
    problem_specs: Iterable,
    limits: Limits = Limits(),
    workers: int = 1,
    keep_results: bool = False,
) -> list[RunRecord]:
    """Run every (solver, problem) pair; failures become statuses, never exceptions."""
    entries = [_as_entry(p) for p in problem_specs]
    if not solver_specs or not entries:
        raise ValueError("need at least one solver and one problem")
    jobs = [(s, e) for s in solver_specs for e in entries]
    if workers <= 1:
        return [run_one(s, e, limits, keep_results) for s, e in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: run_one(job[0], job[1], limits, keep_results), jobs))


@dataclass
class ProfileCurve:
    solver: str
    points: list[tuple[float, float]]
    complete: bool  # fraction reaches 1.0 by tau_max

    def fraction_at(self, tau: float) -> float:
        frac = 0.0
        for t, fr in self.points:
            if t <= tau:
                frac = fr
        return frac


def _ratio(value: float, best: float) -> float:
    if best == 0:
        return 1.0 if value == 0 else math.inf
    return value / best


def performance_profile(records: Sequence[RunRecord], metric: str = "n_f", tau_max: float = 20.0) -> list[ProfileCurve]:
    """Dolan-Moré curves over the problems every solver solved.

    Each curve is sampled at tau = 1, at every distinct ratio up to
    ``tau_max``, and at ``tau_max`` itself.
    """
    key = METRIC_ALIASES.get(metric)
    if key is None:
        raise ValueError(f"unknown metric {metric!r}")
    if not tau_max >= 1:
        raise ValueError("tau_max must be at least 1")
    table: dict[str, dict[tuple, RunRecord]] = {}
    for r in records:
        table.setdefault(r.label, {})[(r.problem, r.n)] = r
    if len(table) < 2:
        raise EmptyComparison("a profile needs at least two solvers")
    solvers = list(table)
    common = set.intersection(*(set(k for k, r in runs.items() if r.converged) for runs in table.values()))
    if not common:
        raise EmptyComparison("no problem was solved by every solver")
    problems = sorted(common)
    best = {p: min(getattr(table[s][p], key) for s in solvers) for p in problems}
    curves = []
    for s in solvers:
        ratios = [_ratio(getattr(table[s][p], key), best[p]) for p in problems]
        taus = sorted({1.0, float(tau_max)} | {r for r in ratios if r <= tau_max})
        pts = [(t, sum(r <= t for r in ratios) / len(ratios)) for t in taus]
        curves.append(ProfileCurve(s, pts, pts[-1][1] == 1.0))
    return curves


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def export_csv(records: Sequence[RunRecord], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RECORD_COLUMNS)
            for r in records:
                w.writerow([_fmt(getattr(r, c)) for c in RECORD_COLUMNS])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse(col: str, text: str):
    if col == "setting":
        return int(text) if text else None
    if col in ("n", "n_f", "n_g", "n_hv", "outer_iters"):
        return int(text)
    if col in ("f_final", "g_norm_final", "wall_time_s"):
        return float(text)
    return text


def read_csv(path) -> list[RunRecord]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    out = []
    for row in rows:
        missing = [c for c in RECORD_COLUMNS if c not in row]
        if missing:
            raise IoError(f"{path}: missing columns {missing}")
        out.append(RunRecord(**{c: _parse(c, row[c]) for c in RECORD_COLUMNS}))
    return out


def export_profile_csv(curves: Sequence[ProfileCurve], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PROFILE_COLUMNS)
            for c in curves:
                for tau, frac in c.points:
                    w.writerow([c.solver, _fmt(float(tau)), _fmt(float(frac))])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
