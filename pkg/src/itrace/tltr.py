"""Truncated Lanczos trust-region loop.

Grows the Krylov subspace one Hessian-vector product at a time, solves the
reduced trust-region problem exactly at each size, and stops as soon as the
cheap residual estimate passes the inexactness test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InternalInvariantViolation
from .lanczos import LanczosState, lanczos_expand, lanczos_init, reconstruct_step, residual_norm
from .problems import Counters, ObjectiveOracle, hess_vec_counted
from .tridiag import SpectralModel, SubproblemSolution, find_sigma_window_lambda, solve_regularized


@dataclass(frozen=True)
class InexactnessParams:
    xi1: float = 1.0
    xi2: float = 0.1
    xi3: float = 1e6

    def __post_init__(self):
        if not (self.xi1 > 0 and 0 < self.xi2 < 1 and self.xi3 > 0):
            raise ValueError(f"invalid inexactness parameters {self}")


class KrylovModel:
    """Reduced model gamma0*e1^T t + 0.5 t^T T t over a fixed Lanczos basis."""

    def __init__(self, state: LanczosState):
        self.state = state
        self.T = state.T
        self.gamma0 = state.gamma0
        self._spectral: Optional[SpectralModel] = None

    @property
    def spectral(self) -> SpectralModel:
        if self._spectral is None:
            self._spectral = SpectralModel.from_tridiag(self.T, self.gamma0)
        return self._spectral

    def solve_tr(self, delta: float) -> tuple[np.ndarray, float]:
        t, lam, _ = self.spectral.trust_region(delta)
        return t, lam

    def solve_reg(self, lam: float) -> np.ndarray:
        return solve_regularized(self.T, lam, self.gamma0)

    def window(self, lam_lo, lam_hi, sigma_lo, sigma_hi):
        return find_sigma_window_lambda(self.T, self.gamma0, lam_lo, lam_hi, sigma_lo, sigma_hi)

    def step(self, t: np.ndarray) -> np.ndarray:
        return reconstruct_step(self.state, t)

    def mu(self, t: np.ndarray) -> float:
        return residual_norm(self.state, t)

    def opnorm(self, lam: float) -> float:
        # ||T + lam I|| from the extreme eigenvalues
        sp = self.spectral
        return max(abs(sp.omega_min + lam), abs(sp.omega_max + lam))


def check_inexact_termination(
    mu: float,
    t_norm: float,
    gamma0: float,
    opnorm_TlI: float,
    params: InexactnessParams,
    branch2_enabled: bool = True,
) -> bool:
    if mu <= params.xi1 * t_norm**2:
        return True
    if not branch2_enabled:
        return False
    m = min(1.0, t_norm)
    return mu <= params.xi2 * m * gamma0 and 1.0 <= params.xi3 * m * opnorm_TlI


@dataclass
class TltrOutput:
    state: LanczosState
    solution: SubproblemSolution
    mu: float
    j: int
    model: KrylovModel


def run_tltr(
    oracle: ObjectiveOracle,
    counters: Counters,
    x: np.ndarray,
    g: np.ndarray,
    delta: float,
    params: InexactnessParams,
    branch2_enabled: bool = True,
) -> TltrOutput:
    hv = lambda v: hess_vec_counted(oracle, counters, x, v)
    state = lanczos_init(g, hv)
    while True:
        model = KrylovModel(state)
        t, lam = model.solve_tr(delta)
        mu = model.mu(t)
        t_norm = float(np.linalg.norm(t))
        if check_inexact_termination(mu, t_norm, state.gamma0, model.opnorm(lam), params, branch2_enabled):
            sol = SubproblemSolution(t, lam, delta, lam > 0.0)
            return TltrOutput(state, sol, mu, state.j, model)
        if state.breakdown or state.j >= oracle.n - 1:
            raise InternalInvariantViolation(f"TLTR reached j = {state.j} with mu = {mu:g} > 0")
        state = lanczos_expand(state, hv)
