"""Symmetric tridiagonal matrices and the reduced-space subproblem solvers.

The trust-region solve works in the eigenbasis of the model matrix: once
``A = V diag(omega) V^T`` is known the secular function
``||t(lam)|| = ||(omega + lam)^{-1} V^T c||`` is a cheap scalar expression, so
Newton's method on ``1/||t(lam)|| - 1/delta`` costs O(m) per step.  For a
tridiagonal ``A`` the decomposition is O(m^2) and computed once per matrix,
then reused across every radius the caller asks about.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import BracketError, InvalidGradientNorm, NotPositiveDefinite, SubproblemStall

MAX_SECULAR_ITERS = 200
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class TridiagSym:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.diag, dtype=float))
        e = np.atleast_1d(np.asarray(self.offdiag, dtype=float))
        if d.size == 0:
            raise ValueError("tridiagonal matrix must have order >= 1")
        if e.size != d.size - 1:
            raise ValueError("offdiag must have exactly one fewer entry than diag")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def order(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, t: np.ndarray) -> np.ndarray:
        out = self.diag * t
        out[:-1] += self.offdiag * t[1:]
        out[1:] += self.offdiag * t[:-1]
        return out

    def leading(self, m: int) -> "TridiagSym":
        """Leading m-by-m principal submatrix."""
        return TridiagSym(self.diag[:m], self.offdiag[: m - 1])

    def norm_estimate(self) -> float:
        """Gershgorin-style bound max|theta| + 2 max|gamma| >= ||T||."""
        off = float(np.max(np.abs(self.offdiag))) if self.offdiag.size else 0.0
        return float(np.max(np.abs(self.diag))) + 2.0 * off


@dataclass
class SubproblemSolution:
    t: np.ndarray
    lam: float
    delta: float
    on_boundary: bool

    @property
    def t_norm(self) -> float:
        return float(np.linalg.norm(self.t))


def extreme_eigenvalues(T: TridiagSym) -> tuple[float, float]:
    """Smallest and largest eigenvalue of T by Sturm-sequence bisection (LAPACK stebz)."""
    m = T.order
    if m == 1:
        return float(T.diag[0]), float(T.diag[0])
    lo = eigh_tridiagonal(T.diag, T.offdiag, eigvals_only=True, select="i",
                          select_range=(0, 0), lapack_driver="stebz")
    hi = eigh_tridiagonal(T.diag, T.offdiag, eigvals_only=True, select="i",
                          select_range=(m - 1, m - 1), lapack_driver="stebz")
    return float(lo[0]), float(hi[0])


def ldl_solve(T: TridiagSym, lam: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (T + lam I) x = rhs by an unpivoted LDL^T factorization.

    Raises NotPositiveDefinite on a nonpositive pivot.
    """
    a = T.diag + lam
    e = T.offdiag
    m = a.size
    d = np.empty(m)
    l = np.empty(max(m - 1, 0))
    d[0] = a[0]
    if not d[0] > 0.0:
        raise NotPositiveDefinite(f"pivot 0 is {d[0]!r}")
    for i in range(m - 1):
        l[i] = e[i] / d[i]
        d[i + 1] = a[i + 1] - l[i] * e[i]
        if not d[i + 1] > 0.0:
            raise NotPositiveDefinite(f"pivot {i + 1} is {d[i + 1]!r}")
    z = np.array(rhs, dtype=float)
    for i in range(1, m):
        z[i] -= l[i - 1] * z[i - 1]
    z /= d
    for i in range(m - 2, -1, -1):
        z[i] -= l[i] * z[i + 1]
    return z


def solve_regularized(T: TridiagSym, lam: float, gamma0: float) -> np.ndarray:
    """Minimizer of gamma0*e1^T t + 0.5 t^T (T + lam I) t."""
    rhs = np.zeros(T.order)
    rhs[0] = -gamma0
    return ldl_solve(T, lam, rhs)


class SpectralModel:
    """The quadratic model ``c^T t + 0.5 t^T A t`` held in A's eigenbasis.

    Shared by the tridiagonal (reduced) and dense (full-space) solvers.
    ``omega`` must be sorted ascending.
    """

    def __init__(self, omega: np.ndarray, V: np.ndarray, c: np.ndarray):
        self.omega = np.asarray(omega, dtype=float)
        self.V = np.asarray(V, dtype=float)
        self.b = self.V.T @ c
        self.c_norm = float(np.linalg.norm(c))
        self.scale = max(1.0, abs(self.omega[0]), abs(self.omega[-1]))

    @classmethod
    def from_tridiag(cls, T: TridiagSym, gamma0: float) -> "SpectralModel":
        if T.order == 1:
            omega, V = T.diag.copy(), np.ones((1, 1))
        else:
            omega, V = eigh_tridiagonal(T.diag, T.offdiag)
        c = np.zeros(T.order)
        c[0] = gamma0
        return cls(omega, V, c)

    @classmethod
    def from_dense(cls, A: np.ndarray, c: np.ndarray) -> "SpectralModel":
        omega, V = np.linalg.eigh(0.5 * (A + A.T))
        return cls(omega, V, c)

    @property
    def omega_min(self) -> float:
        return float(self.omega[0])

    @property
    def omega_max(self) -> float:
        return float(self.omega[-1])

    def _split(self):
        """Shift to the PSD boundary and isolate the leftmost eigenspace."""
        lam_lo = max(0.0, -self.omega[0])
        s = self.omega + lam_lo  # >= 0, with s[0] == 0 exactly when omega_min <= 0
        near = (self.omega - self.omega[0]) <= 16 * _EPS * self.scale
        return lam_lo, s, near

    def _hard_case(self, lam_lo, s, near, radius):
        """Return y for the hard case, or None if the leftmost component matters."""
        far = ~near
        p = np.zeros_like(self.b)
        p[far] = -self.b[far] / s[far]
        pn = float(np.linalg.norm(p))
        bn = float(np.linalg.norm(self.b[near]))
        if pn >= radius:
            return None
        tau = np.sqrt(radius**2 - pn**2)
        if bn > 1e-15 * tau * self.scale:
            return None
        if bn > 0.0:
            p[near] = -tau * self.b[near] / bn
        else:
            p[np.argmax(near)] = tau
        return p

    def trust_region(self, delta: float) -> tuple[np.ndarray, float, bool]:
        """Global minimizer over ||t|| <= delta as (t, lam, on_boundary)."""
        if self.c_norm <= 0.0:
            raise InvalidGradientNorm("linear term must be nonzero")
        if not delta > 0.0:
            raise ValueError("trust-region radius must be positive")
        b, omega = self.b, self.omega
        if omega[0] > 0.0:
            y = -b / omega
            if np.linalg.norm(y) <= delta:
                return self.V @ y, 0.0, False
        lam_lo, s, near = self._split()
        if omega[0] <= 0.0:
            y = self._hard_case(lam_lo, s, near, delta)
            if y is not None:
                if lam_lo == 0.0:
                    # singular PSD with the null component absent: interior point suffices
                    y[near] = 0.0
                    return self.V @ y, 0.0, False
                return self.V @ y, float(lam_lo), True

        b2 = b * b
        active = b2 > 0.0
        s_a, b2_a = s[active], b2[active]
        # bracket h = lam - lam_lo: ||y|| >= |b_i|/(s_i + h) and ||y|| <= ||b||/(min s + h)
        lo = max(0.0, float(np.max(np.sqrt(b2_a) / delta - s_a)))
        hi = max(lo, self.c_norm / delta)
        h = lo
        if h == 0.0 and np.any(s_a == 0.0):
            h = 1e-300
        for _ in range(MAX_SECULAR_ITERS):
            d = s_a + h
            ny = float(np.sqrt(np.sum(b2_a / d**2)))
            if abs(ny - delta) <= 1e-14 * delta:
                break
            if ny > delta:
                lo = max(lo, h)
            else:
                hi = min(hi, h)
            w = float(np.sum(b2_a / d**3))
            h_new = h + (ny - delta) * ny**2 / (delta * w)
            if not (lo < h_new < hi) or not np.isfinite(h_new):
                h_new = 0.5 * (lo + hi)
            if hi - lo <= 4 * _EPS * max(1.0, hi) or h_new == h:
                h = h_new
                break
            h = h_new
        else:
            raise SubproblemStall("secular equation did not converge")
        y = np.zeros_like(b)
        y[active] = -b[active] / (s_a + h)
        return self.V @ y, float(lam_lo + h), True

    def cubic(self, sigma: float) -> tuple[np.ndarray, float]:
        """Global minimizer of c^T t + 0.5 t^T A t + sigma/3 ||t||^3 as (t, lam = sigma ||t||)."""
        if self.c_norm <= 0.0:
            raise InvalidGradientNorm("linear term must be nonzero")
        if not sigma > 0.0:
            raise ValueError("regularization weight must be positive")
        b = self.b
        lam_lo, s, near = self._split()
        if lam_lo > 0.0:
            y = self._hard_case(lam_lo, s, near, lam_lo / sigma)
            if y is not None:
                return self.V @ y, float(lam_lo)

        b2 = b * b
        active = b2 > 0.0
        s_a, b2_a = s[active], b2[active]
        # L(h) = log||y(h)|| - log(lam_lo + h) + log(sigma) is decreasing in h and
        # close to linear in log(h) in every regime, so take Newton steps in log(h)
        lo = 0.0
        hi = float(np.sqrt(sigma * self.c_norm)) + 1.0
        h = hi
        for _ in range(MAX_SECULAR_ITERS):
            d = s_a + h
            with np.errstate(over="ignore", divide="ignore"):
                ny = float(np.sqrt(np.sum(b2_a / d**2)))
                w = float(np.sum(b2_a / d**3))
            lam = lam_lo + h
            target = lam / sigma
            if not (np.isfinite(ny) and np.isfinite(w)):
                # overshot towards the pole at h = 0
                lo = h
                h = 0.5 * (lo + hi)
                continue
            if abs(ny - target) <= 1e-14 * max(ny, target):
                break
            if ny > target:
                lo = max(lo, h)
            else:
                hi = min(hi, h)
            L = np.log(ny) - np.log(target)
            dL = -h * (w / ny**2 + 1.0 / lam)
            with np.errstate(over="ignore"):
                h_new = h * np.exp(-L / dL)
            if not (lo < h_new < hi) or not np.isfinite(h_new):
                h_new = 0.5 * (lo + hi)
            if hi - lo <= 4 * _EPS * max(1.0, hi) or h_new == h:
                h = h_new
                break
            h = h_new
        else:
            raise SubproblemStall("cubic secular equation did not converge")
        y = np.zeros_like(b)
        y[active] = -b[active] / (s_a + h)
        return self.V @ y, float(lam_lo + h)


def solve_trust_region(T: TridiagSym, gamma0: float, delta: float) -> SubproblemSolution:
    """Globally solve min gamma0*e1^T t + 0.5 t^T T t subject to ||t|| <= delta."""
    if not gamma0 > 0.0:
        raise InvalidGradientNorm(f"gamma0 must be positive, got {gamma0}")
    t, lam, boundary = SpectralModel.from_tridiag(T, gamma0).trust_region(delta)
    return SubproblemSolution(t, lam, delta, boundary)


def sigma_window_search(
    solve_reg: Callable[[float], np.ndarray],
    lambda_lo: float,
    lambda_hi: float,
    sigma_lo: float,
    sigma_hi: float,
    max_iters: int = 200,
) -> tuple[float, np.ndarray]:
    """Bisection on phi(lam) = lam/||t(lam)|| until it lands in (sigma_lo, sigma_hi).

    ``solve_reg`` maps lam to the minimizer of the lam-regularized model; phi
    is increasing on the bracket, so the first interior hit is returned.
    """

    def phi(lam):
        t = solve_reg(lam)
        return lam / np.linalg.norm(t), t

    try:
        r, t = phi(lambda_lo)
        if sigma_lo < r < sigma_hi:
            return float(lambda_lo), t
        if r >= sigma_hi:
            raise BracketError(f"phi(lambda_lo) = {r} already above the window")
    except NotPositiveDefinite:
        pass  # lambda_lo may sit exactly on the PSD boundary
    r, t = phi(lambda_hi)
    if sigma_lo < r < sigma_hi:
        return float(lambda_hi), t
    if r <= sigma_lo:
        raise BracketError(f"phi(lambda_hi) = {r} does not reach the window")
    a, b = lambda_lo, lambda_hi
    for _ in range(max_iters):
        m = 0.5 * (a + b)
        if not a < m < b:
            break
        r, t = phi(m)
        if sigma_lo < r < sigma_hi:
            return float(m), t
        if r <= sigma_lo:
            a = m
        else:
            b = m
    raise BracketError("window search exhausted its bracket")


def find_sigma_window_lambda(
    T: TridiagSym,
    gamma0: float,
    lambda_lo: float,
    lambda_hi: float,
    sigma_lo: float,
    sigma_hi: float,
) -> tuple[float, np.ndarray]:
    return sigma_window_search(
        lambda lam: solve_regularized(T, lam, gamma0), lambda_lo, lambda_hi, sigma_lo, sigma_hi
    )
