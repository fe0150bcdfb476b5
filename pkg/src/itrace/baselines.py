"""Comparators: exact TRACE (dense subproblems) and Lanczos-based ARC."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    InternalInvariantViolation,
    ItraceError,
    NonFiniteHessVec,
    NonFiniteObjective,
    NotPositiveDefinite,
    ProblemTooLarge,
)
from .fds import run_fds
from .lanczos import LanczosState, lanczos_expand, lanczos_init, reconstruct_step, residual_norm
from .problems import Counters, ObjectiveOracle, eval_f_counted, eval_grad_counted, hess_vec_counted
from .solver import (
    CONVERGED,
    MAX_ITERS,
    TIME_LIMIT,
    ItraceConfig,
    IterationRecord,
    SolveResult,
    StepOutcome,
    run_outer,
)
from .tridiag import SpectralModel, TridiagSym, sigma_window_search

DENSE_CAP = 2000

# kappa_theta used with each of the three experimental settings
ARC_KAPPA = {1: 0.01, 2: 0.1, 3: 0.9}


class DenseModel:
    """Full-space model g^T s + 0.5 s^T H s; the residual of every solve is zero."""

    def __init__(self, H: np.ndarray, g: np.ndarray):
        self.H = 0.5 * (H + H.T)
        self.g = np.asarray(g, dtype=float)
        self.gamma0 = float(np.linalg.norm(self.g))
        self.spectral = SpectralModel.from_dense(self.H, self.g)

    def solve_tr(self, delta: float) -> tuple[np.ndarray, float]:
        t, lam, _ = self.spectral.trust_region(delta)
        return t, lam

    def solve_reg(self, lam: float) -> np.ndarray:
        sp = self.spectral
        d = sp.omega + lam
        if not d[0] > 0.0:
            raise NotPositiveDefinite(f"H + {lam:g} I is not positive definite")
        return sp.V @ (-sp.b / d)

    def window(self, lam_lo, lam_hi, sigma_lo, sigma_hi):
        return sigma_window_search(self.solve_reg, lam_lo, lam_hi, sigma_lo, sigma_hi)

    def step(self, t: np.ndarray) -> np.ndarray:
        return t

    def mu(self, t: np.ndarray) -> float:
        return 0.0

    def opnorm(self, lam: float) -> float:
        sp = self.spectral
        return max(abs(sp.omega_min + lam), abs(sp.omega_max + lam))

    def kkt_residual(self, t: np.ndarray, lam: float) -> float:
        return float(np.linalg.norm(self.g + self.H @ t + lam * t))


def dense_hessian_counted(oracle: ObjectiveOracle, counters: Counters, x: np.ndarray) -> np.ndarray:
    counters.n_hess += 1
    H = oracle.dense_hessian(x)
    if not np.all(np.isfinite(H)):
        raise NonFiniteHessVec("dense Hessian has non-finite entries")
    return H


def trace_step(oracle, counters, x, f, g, delta, sigma, config: ItraceConfig) -> StepOutcome:
    model = DenseModel(dense_hessian_counted(oracle, counters, x), g)
    t, lam = model.solve_tr(delta)
    res = run_fds(oracle, counters, x, f, model, t, lam, delta, sigma, config.fds)
    return StepOutcome(res.s, res.f_trial, res.lam, 0.0, oracle.n - 1, res.delta_bar, res.sigma_bar, [res])


def trace_solve(
    oracle: ObjectiveOracle,
    x0=None,
    config: Optional[ItraceConfig] = None,
    dense_cap: int = DENSE_CAP,
) -> SolveResult:
    """Same outer and FDS logic as I-TRACE with exact dense subproblem solves."""
    if oracle.n > dense_cap:
        raise ProblemTooLarge(f"n = {oracle.n} exceeds the dense cap {dense_cap}")
    config = config or ItraceConfig()
    x0 = oracle.x0 if x0 is None else x0
    return run_outer(oracle, x0, config, trace_step, "trace")


@dataclass(frozen=True)
class ArcConfig:
    eta1: float = 1e-4
    eta2: float = 0.9
    sigma0: float = 1.0
    kappa_theta: float = 0.1
    sigma_floor: float = 1e-16
    grad_tol_rel: float = 1e-5
    max_outer_iters: int = 100_000
    time_limit_s: Optional[float] = 60.0

    def __post_init__(self):
        if not 0 < self.eta1 <= self.eta2 < 1:
            raise ValueError("need 0 < eta1 <= eta2 < 1")
        if not 0 < self.kappa_theta < 1:
            raise ValueError("kappa_theta must lie in (0, 1)")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")

    @classmethod
    def for_setting(cls, setting: int, **overrides) -> "ArcConfig":
        return cls(kappa_theta=ARC_KAPPA[setting], **overrides)


def arc_solve_reduced(T: TridiagSym, gamma0: float, sigma: float) -> tuple[np.ndarray, float]:
    """Global minimizer of gamma0*e1^T t + 0.5 t^T T t + sigma/3 ||t||^3, with lam = sigma*||t||."""
    return SpectralModel.from_tridiag(T, gamma0).cubic(sigma)


def _leading(state: LanczosState, m: int) -> LanczosState:
    """View of the first m+1 Lanczos vectors, as a fresh run would have produced."""
    if m == state.j:
        return state
    return LanczosState(
        state.Q[:, : m + 1], state.theta[: m + 1], state.gamma[:m], state.gamma0,
        np.zeros(0), float(state.gamma[m]), m,
    )


def _arc_subproblem(state, sigma, g_norm, kappa, n, hv):
    """Grow the subspace until the cubic-model residual passes the TC.s test.

    Returns the full state (possibly grown) plus the reduced solution and size
    used.  Vectors already built are reused before any new product is spent.
    """
    m = 0
    while True:
        view = _leading(state, m)
        t, lam = arc_solve_reduced(view.T, view.gamma0, sigma)
        r = residual_norm(view, t)
        if r <= kappa * min(1.0, float(np.linalg.norm(t))) * g_norm or view.breakdown:
            return state, view, t, lam, r
        if m == state.j:
            if state.j >= n - 1:
                raise InternalInvariantViolation(f"ARC subspace reached j = {state.j} with r = {r:g}")
            state = lanczos_expand(state, hv)
        m += 1


def arc_solve(oracle: ObjectiveOracle, x0=None, config: Optional[ArcConfig] = None) -> SolveResult:
    config = config or ArcConfig()
    x0 = oracle.x0 if x0 is None else x0
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
        sigma = config.sigma0
        state = None  # Lanczos basis at the current x, kept across unsuccessful steps
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
            hv = lambda v, x=x: hess_vec_counted(oracle, counters, x, v)
            if state is None:
                state = lanczos_init(g, hv)
            state, view, t, lam, r = _arc_subproblem(state, sigma, g_norm, config.kappa_theta, oracle.n, hv)
            s = reconstruct_step(view, t)
            s_norm = float(np.linalg.norm(t))
            model_dec = -(view.gamma0 * t[0] + 0.5 * t @ view.T.matvec(t) + sigma / 3.0 * s_norm**3)
            try:
                f_trial = eval_f_counted(oracle, counters, x + s)
            except NonFiniteObjective:
                f_trial = np.inf
            rho = (f - f_trial) / model_dec if model_dec > 0 else -np.inf
            accepted = bool(rho >= config.eta1)
            if rho >= config.eta2:
                sigma_new = max(min(sigma, g_norm), config.sigma_floor)
            elif accepted:
                sigma_new = sigma
            else:
                sigma_new = 2.0 * sigma
            records.append(IterationRecord(
                k=k, g_norm=g_norm, f=f, f_new=f_trial if accepted else f, j=view.j,
                delta=np.nan, sigma=sigma, lam=lam, s_norm=s_norm, mu=r, delta_bar=np.nan,
                sigma_bar=sigma_new, n_f=counters.n_f, n_g=counters.n_g + int(accepted),
                n_hv=counters.n_hv, accepted=accepted,
            ))
            sigma = sigma_new
            if accepted:
                x = x + s
                f = f_trial
                g = eval_grad_counted(oracle, counters, x)
                state = None
    except ItraceError as exc:
        status = f"Error({type(exc).__name__})"
    return SolveResult("arc", status, x, f, g_norm, g0_norm, records, counters,
                       time.perf_counter() - start)
