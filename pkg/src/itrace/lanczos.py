"""Lanczos process with full reorthogonalization.

Builds an orthonormal basis Q of the Krylov subspace span{g, Hg, ..., H^j g}
together with the tridiagonal projection T = Q^T H Q.  The caller supplies the
Hessian-vector product as a callable so that every product goes through its
own counters; each init/expand performs exactly one product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BreakdownExpand, DimensionError, NotPositiveDefinite, ZeroGradient
from .tridiag import TridiagSym, extreme_eigenvalues

BREAKDOWN_RTOL = 1e-12


@dataclass
class LanczosState:
    Q: np.ndarray  # n x (j+1), orthonormal columns
    theta: np.ndarray  # diagonal of T
    gamma: np.ndarray  # off-diagonal of T
    gamma0: float
    y_next: np.ndarray
    gamma_next: float
    j: int

    @property
    def T(self) -> TridiagSym:
        return TridiagSym(self.theta, self.gamma)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def breakdown(self) -> bool:
        return self.gamma_next == 0.0


def _next_vector(Q, q, hq, theta, gamma_prev, q_prev):
    y = hq - theta * q
    if q_prev is not None:
        y -= gamma_prev * q_prev
    # classical Gram-Schmidt, twice
    y -= Q @ (Q.T @ y)
    y -= Q @ (Q.T @ y)
    gamma = float(np.linalg.norm(y))
    # the subspace cannot outgrow R^n; treat tiny remainders as exact breakdown
    if Q.shape[1] >= Q.shape[0] or gamma <= BREAKDOWN_RTOL * max(1.0, float(np.linalg.norm(hq))):
        return np.zeros_like(y), 0.0
    return y, gamma


def lanczos_init(g: np.ndarray, hess_vec: Callable[[np.ndarray], np.ndarray]) -> LanczosState:
    g = np.asarray(g, dtype=float)
    gamma0 = float(np.linalg.norm(g))
    if gamma0 == 0.0:
        raise ZeroGradient("Lanczos needs a nonzero starting vector")
    q = g / gamma0
    hq = np.asarray(hess_vec(q), dtype=float)
    theta = float(q @ hq)
    Q = q[:, None].copy()
    y, gamma_next = _next_vector(Q, q, hq, theta, 0.0, None)
    return LanczosState(Q, np.array([theta]), np.zeros(0), gamma0, y, gamma_next, 0)


def lanczos_expand(state: LanczosState, hess_vec: Callable[[np.ndarray], np.ndarray]) -> LanczosState:
    if state.breakdown:
        raise BreakdownExpand("Krylov subspace is invariant; nothing to expand")
    q_prev = state.Q[:, -1]
    q = state.y_next / state.gamma_next
    hq = np.asarray(hess_vec(q), dtype=float)
    theta = float(q @ hq)
    Q = np.hstack([state.Q, q[:, None]])
    y, gamma_next = _next_vector(Q, q, hq, theta, state.gamma_next, q_prev)
    return LanczosState(
        Q,
        np.append(state.theta, theta),
        np.append(state.gamma, state.gamma_next),
        state.gamma0,
        y,
        gamma_next,
        state.j + 1,
    )


def reconstruct_step(state: LanczosState, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (state.j + 1,):
        raise DimensionError(f"expected {state.j + 1} reduced coordinates, got {t.shape}")
    return state.Q @ t


def residual_norm(state: LanczosState, t: np.ndarray) -> float:
    """||g + (H + lam I) Q t|| for any (t, lam) solving the reduced KKT system."""
    return float(state.gamma_next * abs(t[-1]))


def condition_diagnostic(state: LanczosState, lam: float) -> dict:
    """Condition number of T + lam I and the resulting a-priori residual bound.

    ``H_max_est = max|theta| + 2 max gamma`` stands in for ||H_k||, which is
    not available matrix-free; it is an estimate, not a guaranteed bound.
    """
    w_min, w_max = extreme_eigenvalues(state.T)
    if not w_min + lam > 0.0:
        raise NotPositiveDefinite("T + lam I is not positive definite")
    kappa = (w_max + lam) / (w_min + lam)
    gammas = np.append(state.gamma, state.gamma_next)
    h_max_est = float(np.max(np.abs(state.theta))) + 2.0 * float(np.max(gammas))
    rate = (np.sqrt(kappa) - 1.0) / (np.sqrt(kappa) + 1.0)
    bound = 2.0 * state.gamma0 * h_max_est * kappa / (w_max + lam) * rate**state.j
    return {"kappa": float(kappa), "residual_bound": float(bound)}
