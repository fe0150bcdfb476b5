"""The inexact trust-region driver with contractions and expansions.

Each outer iteration runs the truncated Lanczos loop, then alternates
:func:`run_fds` with one-vector growth of the Krylov subspace until the
accepted step also satisfies the inexactness test in the full space.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InternalInvariantViolation, ItraceError
from .fds import FdsParams, FdsResult, run_fds
from .lanczos import lanczos_expand
from .problems import Counters, ObjectiveOracle, eval_f_counted, eval_grad_counted, hess_vec_counted
from .tltr import InexactnessParams, KrylovModel, check_inexact_termination, run_tltr

# (xi1, xi2) for the three experimental settings; xi3 = 1e6 throughout
SETTINGS = {1: (0.1, 0.01), 2: (1.0, 0.1), 3: (9.0, 0.9)}

CONVERGED = "Converged"
MAX_ITERS = "MaxIters"
TIME_LIMIT = "TimeLimit"

TIGHTENING_MODES = ("off", "superlinear", "quadratic")


@dataclass(frozen=True)
class ItraceConfig:
    xi: InexactnessParams = field(default_factory=InexactnessParams)
    fds: FdsParams = field(default_factory=FdsParams)
    gamma_E: float = 1.1
    delta0: float = 1.0
    sigma0: float = 1.0
    grad_tol_rel: float = 1e-5
    max_outer_iters: int = 100_000
    time_limit_s: Optional[float] = 60.0
    local_tightening: str = "off"
    branch2_enabled: bool = True

    def __post_init__(self):
        if not self.gamma_E > 1:
            raise ValueError("gamma_E must exceed 1")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if not self.fds.sigma_lo <= self.sigma0 <= self.fds.sigma_hi:
            raise ValueError("sigma0 must lie in [sigma_lo, sigma_hi]")
        if self.local_tightening not in TIGHTENING_MODES:
            raise ValueError(f"local_tightening must be one of {TIGHTENING_MODES}")

    @classmethod
    def for_setting(cls, setting: int, **overrides) -> "ItraceConfig":
        xi1, xi2 = SETTINGS[setting]
        return cls(xi=InexactnessParams(xi1, xi2, 1e6), **overrides)


@dataclass
class IterationRecord:
    k: int
    g_norm: float
    f: float
    f_new: float
    j: int
    delta: float
    sigma: float
    lam: float
    s_norm: float
    mu: float
    delta_bar: float
    sigma_bar: float
    n_f: int
    n_g: int
    n_hv: int
    accepted: bool = True
    fds: list[FdsResult] = field(default_factory=list, repr=False)


@dataclass
class SolveResult:
    solver: str
    status: str
    x: np.ndarray
    f: float
    g_norm: float
    g0_norm: float
    records: list[IterationRecord]
    counters: Counters
    wall_time_s: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def n_iters(self) -> int:
        return len(self.records)


@dataclass
class StepOutcome:
    s: np.ndarray
    f_new: float
    lam: float
    mu: float
    j: int
    delta_bar: float
    sigma_bar: float
    fds: list[FdsResult]


def _accept(mu, t_norm, g_norm, opnorm, config: ItraceConfig) -> bool:
    ok = check_inexact_termination(mu, t_norm, g_norm, opnorm, config.xi, config.branch2_enabled)
    if config.local_tightening == "superlinear":
        ok = ok and mu <= 0.1 * min(1.0, np.sqrt(g_norm)) * g_norm
    elif config.local_tightening == "quadratic":
        ok = ok and mu <= g_norm**2
    return ok


def itrace_step(
    oracle: ObjectiveOracle,
    counters: Counters,
    x: np.ndarray,
    f: float,
    g: np.ndarray,
    delta: float,
    sigma: float,
    config: ItraceConfig,
) -> StepOutcome:
    """One outer iteration from iterate x with radius delta and ratio bound sigma."""
    out = run_tltr(oracle, counters, x, g, delta, config.xi, config.branch2_enabled)
    state, model = out.state, out.model
    t, lam = out.solution.t, out.solution.lam
    hv = lambda v: hess_vec_counted(oracle, counters, x, v)
    calls = []
    while True:
        res = run_fds(oracle, counters, x, f, model, t, lam, delta, sigma, config.fds)
        calls.append(res)
        if _accept(res.mu, float(np.linalg.norm(res.t)), state.gamma0, model.opnorm(res.lam), config):
            break
        if state.breakdown or state.j >= oracle.n - 1:
            raise InternalInvariantViolation(f"cannot grow subspace past j = {state.j}")
        state = lanczos_expand(state, hv)
        model = KrylovModel(state)
        t, lam = model.solve_tr(delta)
    return StepOutcome(res.s, res.f_trial, res.lam, res.mu, state.j, res.delta_bar, res.sigma_bar, calls)


StepFn = Callable[[ObjectiveOracle, Counters, np.ndarray, float, np.ndarray, float, float, ItraceConfig], StepOutcome]


def run_outer(oracle: ObjectiveOracle, x0, config: ItraceConfig, step_fn: StepFn, solver: str) -> SolveResult:
    """Shared outer loop: stopping rule, radius/ratio updates and bookkeeping."""
    counters = Counters()
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    records: list[IterationRecord] = []
    f, g_norm, g0_norm = np.nan, np.nan, np.nan
    status = None
    try:
        f = eval_f_counted(oracle, counters, x)
        g = eval_grad_counted(oracle, counters, x)
        g0_norm = g_norm = float(np.linalg.norm(g))
        tol = config.grad_tol_rel * max(1.0, g0_norm)
        delta, sigma = config.delta0, config.sigma0
        for k in itertools.count():
            g_norm = float(np.linalg.norm(g))
            if g_norm <= tol:
                status = CONVERGED
                break
            if k >= config.max_outer_iters:
                status = MAX_ITERS
                break
            if config.time_limit_s is not None and time.perf_counter() - start > config.time_limit_s:
                status = TIME_LIMIT
                break
            step = step_fn(oracle, counters, x, f, g, delta, sigma, config)
            s_norm = float(np.linalg.norm(step.s))
            records.append(IterationRecord(
                k=k, g_norm=g_norm, f=f, f_new=step.f_new, j=step.j, delta=delta, sigma=sigma,
                lam=step.lam, s_norm=s_norm, mu=step.mu, delta_bar=step.delta_bar,
                sigma_bar=step.sigma_bar, n_f=counters.n_f, n_g=counters.n_g + 1,
                n_hv=counters.n_hv, fds=step.fds,
            ))
            x = x + step.s
            f = step.f_new
            g = eval_grad_counted(oracle, counters, x)
            delta = max(step.delta_bar, config.gamma_E * s_norm)
            sigma = step.sigma_bar
    except ItraceError as exc:
        status = f"Error({type(exc).__name__})"
    return SolveResult(solver, status, x, f, g_norm, g0_norm, records, counters,
                       time.perf_counter() - start)


def itrace_solve(oracle: ObjectiveOracle, x0=None, config: Optional[ItraceConfig] = None) -> SolveResult:
    config = config or ItraceConfig()
    x0 = oracle.x0 if x0 is None else x0
    return run_outer(oracle, x0, config, itrace_step, "itrace")


def complexity_audit(records: list[IterationRecord], epsilon: float, eta: float = 1e-4) -> dict:
    """Count iterations above epsilon and re-check each accepted step's decrease."""
    certs = []
    for r in records:
        if not r.accepted:
            continue
        decrease = r.f - r.f_new
        required = eta * r.s_norm**3
        ok = decrease >= required - 1e-12 * max(1.0, abs(r.f))
        certs.append({"k": r.k, "decrease": decrease, "required": required, "ok": bool(ok)})
    return {
        "n_iters_above_eps": sum(r.g_norm > epsilon for r in records),
        "decrease_certificates": certs,
    }
