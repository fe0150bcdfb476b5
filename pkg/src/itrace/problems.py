"""Matrix-free objective oracles, evaluation counters and the native test suite.

Every oracle exposes ``eval_f``, ``eval_grad`` and ``hess_vec``.  A dense
Hessian is available through :meth:`ObjectiveOracle.dense_hessian` for the
exact-subproblem baseline only; iterative solvers never touch it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionError,
    NonFiniteGradient,
    NonFiniteHessVec,
    NonFiniteObjective,
    UnknownProblem,
)

Vector = np.ndarray


@dataclass(frozen=True)
class ObjectiveOracle:
    """A smooth objective given by pure callables.

    Oracles hold no mutable state, so one instance may be shared between
    concurrent solves.  Evaluation counts live in :class:`Counters`, which is
    owned by the solve call.
    """

    n: int
    eval_f: Callable[[Vector], float]
    eval_grad: Callable[[Vector], Vector]
    hess_vec: Callable[[Vector, Vector], Vector]
    hess: Optional[Callable[[Vector], np.ndarray]] = None
    name: str = ""
    x0: Optional[Vector] = None
    f_star: Optional[float] = None
    x_star: Optional[Vector] = None

    def dense_hessian(self, x: Vector) -> np.ndarray:
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        # column-by-column from products; symmetrize to remove rounding skew
        H = np.empty((self.n, self.n))
        e = np.zeros(self.n)
        for i in range(self.n):
            e[i] = 1.0
            H[:, i] = self.hess_vec(x, e)
            e[i] = 0.0
        return 0.5 * (H + H.T)


@dataclass
class Counters:
    n_f: int = 0
    n_g: int = 0
    n_hv: int = 0
    n_hess: int = 0  # dense Hessian evaluations (exact baseline only)

    def reset(self) -> None:
        self.n_f = self.n_g = self.n_hv = self.n_hess = 0

    def snapshot(self) -> dict:
        return {"n_f": self.n_f, "n_g": self.n_g, "n_hv": self.n_hv, "n_hess": self.n_hess}


def _check_dim(oracle: ObjectiveOracle, *vectors: Vector) -> None:
    for v in vectors:
        if np.shape(v) != (oracle.n,):
            raise DimensionError(f"expected shape ({oracle.n},), got {np.shape(v)}")


def eval_f_counted(oracle: ObjectiveOracle, counters: Counters, x: Vector) -> float:
    _check_dim(oracle, x)
    counters.n_f += 1
    val = float(oracle.eval_f(x))
    if not np.isfinite(val):
        raise NonFiniteObjective(f"f(x) = {val}")
    return val


def eval_grad_counted(oracle: ObjectiveOracle, counters: Counters, x: Vector) -> Vector:
    _check_dim(oracle, x)
    counters.n_g += 1
    g = np.asarray(oracle.eval_grad(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("gradient has non-finite components")
    return g


def hess_vec_counted(oracle: ObjectiveOracle, counters: Counters, x: Vector, v: Vector) -> Vector:
    _check_dim(oracle, x, v)
    counters.n_hv += 1
    hv = np.asarray(oracle.hess_vec(x, v), dtype=float)
    if not np.all(np.isfinite(hv)):
        raise NonFiniteHessVec("Hessian-vector product has non-finite components")
    return hv


def check_derivatives(oracle: ObjectiveOracle, x: Vector, step: float = 1e-6, seed: int = 0) -> dict:
    """Compare analytic derivatives against central finite differences.

    The gradient is checked coordinate-wise against differences of ``eval_f``;
    Hessian-vector products are checked along coordinate directions (or 10
    random unit directions when n > 20) against differences of ``eval_grad``.
    Symmetry is measured on random pairs as
    ``|u.Hw - w.Hu| / (|u| |w| (1 + |Hu|))``.
    """
    x = np.asarray(x, dtype=float)
    n = oracle.n
    h = step * max(1.0, float(np.linalg.norm(x)))

    g = np.asarray(oracle.eval_grad(x), dtype=float)
    g_fd = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g_fd[i] = (oracle.eval_f(x + e) - oracle.eval_f(x - e)) / (2 * h)
    grad_err = float(np.linalg.norm(g_fd - g) / max(1.0, np.linalg.norm(g)))

    rng = np.random.default_rng(seed)
    if n <= 20:
        dirs = np.eye(n)
    else:
        dirs = rng.standard_normal((10, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    hv_err = 0.0
    for v in dirs:
        hv = np.asarray(oracle.hess_vec(x, v), dtype=float)
        hv_fd = (np.asarray(oracle.eval_grad(x + h * v)) - np.asarray(oracle.eval_grad(x - h * v))) / (2 * h)
        hv_err = max(hv_err, float(np.linalg.norm(hv_fd - hv) / max(1.0, np.linalg.norm(hv))))

    sym_err = 0.0
    for _ in range(5):
        u = rng.standard_normal(n)
        w = rng.standard_normal(n)
        hu = np.asarray(oracle.hess_vec(x, u), dtype=float)
        hw = np.asarray(oracle.hess_vec(x, w), dtype=float)
        scale = np.linalg.norm(u) * np.linalg.norm(w) * (1.0 + np.linalg.norm(hu))
        sym_err = max(sym_err, float(abs(u @ hw - w @ hu) / scale))

    return {"max_grad_rel_err": grad_err, "max_hv_rel_err": hv_err, "symmetry_err": sym_err}


# ---------------------------------------------------------------------------
# Problem constructors
# ---------------------------------------------------------------------------


def quadratic(diag, x0=None, name: str = "quadratic") -> ObjectiveOracle:
    """f(x) = 0.5 x^T D x for a diagonal D (given as a vector) or a symmetric matrix."""
    D = np.asarray(diag, dtype=float)
    if D.ndim == 1:
        d = D
        n = d.size
        f = lambda x: 0.5 * float(x @ (d * x))
        grad = lambda x: d * x
        hv = lambda x, v: d * v
        hess = lambda x: np.diag(d)
    else:
        A = 0.5 * (D + D.T)
        n = A.shape[0]
        f = lambda x: 0.5 * float(x @ A @ x)
        grad = lambda x: A @ x
        hv = lambda x, v: A @ v
        hess = lambda x: A.copy()
    x0 = np.ones(n) if x0 is None else np.asarray(x0, dtype=float)
    return ObjectiveOracle(n, f, grad, hv, hess, name=name, x0=x0, f_star=0.0, x_star=np.zeros(n))


def zero_function(n: int) -> ObjectiveOracle:
    z = lambda x: np.zeros(n)
    return ObjectiveOracle(
        n, lambda x: 0.0, z, lambda x, v: np.zeros(n), lambda x: np.zeros((n, n)),
        name="zero", x0=np.zeros(n), f_star=0.0,
    )


def rosenbrock(n: int = 2) -> ObjectiveOracle:
    """Extended Rosenbrock: independent 2-D Rosenbrock blocks on (x[2i], x[2i+1])."""
    if n < 2 or n % 2:
        raise DimensionError("extended Rosenbrock needs an even dimension")

    def f(x):
        a, b = x[0::2], x[1::2]
        return float(np.sum(100.0 * (b - a**2) ** 2 + (1.0 - a) ** 2))

    def grad(x):
        a, b = x[0::2], x[1::2]
        g = np.empty_like(x)
        g[0::2] = -400.0 * a * (b - a**2) - 2.0 * (1.0 - a)
        g[1::2] = 200.0 * (b - a**2)
        return g

    def hv(x, v):
        a, b = x[0::2], x[1::2]
        va, vb = v[0::2], v[1::2]
        out = np.empty_like(v)
        out[0::2] = (1200.0 * a**2 - 400.0 * b + 2.0) * va - 400.0 * a * vb
        out[1::2] = -400.0 * a * va + 200.0 * vb
        return out

    x0 = np.tile([-1.2, 1.0], n // 2)
    return ObjectiveOracle(n, f, grad, hv, name="rosenbrock", x0=x0, f_star=0.0, x_star=np.ones(n))


def log_quadratic(cond: float, n: int = 50, name: str = "") -> ObjectiveOracle:
    """Convex quadratic with diagonal log-spaced in [1, cond]."""
    d = np.logspace(0.0, np.log10(cond), n) if n > 1 else np.ones(1)
    return quadratic(d, x0=np.ones(n), name=name or f"quadratic-{cond:g}")


def quartic_saddle(n: int = 10) -> ObjectiveOracle:
    """f(x) = sum(x^4)/4 - sum(x^2)/2; saddle at 0, minimizers at x_i = +-1."""
    f = lambda x: float(0.25 * np.sum(x**4) - 0.5 * np.sum(x**2))
    grad = lambda x: x**3 - x
    hv = lambda x, v: (3.0 * x**2 - 1.0) * v
    hess = lambda x: np.diag(3.0 * x**2 - 1.0)
    i = np.arange(1, n + 1)
    # distinct magnitudes keep the Hessian spectrum simple at the start
    x0 = 0.05 * i / n * (-1.0) ** i
    return ObjectiveOracle(n, f, grad, hv, hess, name="quartic-saddle", x0=x0, f_star=-0.25 * n)


def trigonometric(n: int = 10) -> ObjectiveOracle:
    """More-Garbow-Hillstrom trigonometric function (sum of n squared residuals)."""
    idx = np.arange(1, n + 1, dtype=float)

    def resid(x):
        return n - np.sum(np.cos(x)) + idx * (1.0 - np.cos(x)) - np.sin(x)

    def f(x):
        r = resid(x)
        return float(r @ r)

    def grad(x):
        r = resid(x)
        s = np.sin(x)
        d = idx * s - np.cos(x)
        return 2.0 * (s * np.sum(r) + d * r)

    def hv(x, v):
        r = resid(x)
        s, c = np.sin(x), np.cos(x)
        d = idx * s - c
        jv = s @ v + d * v
        jtjv = s * np.sum(jv) + d * jv
        curv = np.sum(r) * c * v + r * (idx * c + s) * v
        return 2.0 * (jtjv + curv)

    return ObjectiveOracle(n, f, grad, hv, name="trigonometric", x0=np.full(n, 1.0 / n), f_star=0.0)


def beale() -> ObjectiveOracle:
    yk = np.array([1.5, 2.25, 2.625])
    p = np.arange(1, 4)

    def parts(x):
        a, b = x
        bp = b**p
        r = yk - a * (1.0 - bp)
        ja = -(1.0 - bp)
        jb = a * p * b ** (p - 1)
        return r, ja, jb

    def f(x):
        r, _, _ = parts(x)
        return float(r @ r)

    def grad(x):
        r, ja, jb = parts(x)
        return 2.0 * np.array([r @ ja, r @ jb])

    def hess(x):
        a, b = x
        r, ja, jb = parts(x)
        # second derivatives of each residual
        r_ab = p * b ** (p - 1)
        r_bb = a * p * (p - 1) * b ** np.maximum(p - 2, 0) * (p >= 2)
        H = np.array([
            [ja @ ja, ja @ jb + r @ r_ab],
            [ja @ jb + r @ r_ab, jb @ jb + r @ r_bb],
        ])
        return 2.0 * H

    hv = lambda x, v: hess(x) @ v
    return ObjectiveOracle(2, f, grad, hv, hess, name="beale", x0=np.array([1.0, 1.0]),
                           f_star=0.0, x_star=np.array([3.0, 0.5]))


def cosine(n: int = 20) -> ObjectiveOracle:
    """Chained nonconvex sum of cos(x_i^2 - x_{i+1}/2) (CUTEst COSINE)."""

    def u(x):
        return x[:-1] ** 2 - 0.5 * x[1:]

    def f(x):
        return float(np.sum(np.cos(u(x))))

    def grad(x):
        su = np.sin(u(x))
        g = np.zeros_like(x)
        g[:-1] -= 2.0 * x[:-1] * su
        g[1:] += 0.5 * su
        return g

    def hv(x, v):
        uu = u(x)
        su, cu = np.sin(uu), np.cos(uu)
        a = 2.0 * x[:-1] * v[:-1] - 0.5 * v[1:]
        out = np.zeros_like(v)
        out[:-1] -= cu * a * 2.0 * x[:-1] + 2.0 * su * v[:-1]
        out[1:] -= cu * a * (-0.5)
        return out

    return ObjectiveOracle(n, f, grad, hv, name="cosine", x0=np.ones(n), f_star=-(n - 1.0))


def arwhead(n: int = 100) -> ObjectiveOracle:
    """Arrow-head quartic (CUTEst ARWHEAD); minimum 0 at (1,...,1,0)."""

    def f(x):
        y, z = x[:-1], x[-1]
        return float(np.sum(-4.0 * y + 3.0) + np.sum((y**2 + z**2) ** 2))

    def grad(x):
        y, z = x[:-1], x[-1]
        w = y**2 + z**2
        g = np.empty_like(x)
        g[:-1] = -4.0 + 4.0 * y * w
        g[-1] = np.sum(4.0 * z * w)
        return g

    def hv(x, v):
        y, z = x[:-1], x[-1]
        vy, vz = v[:-1], v[-1]
        diag = 4.0 * (3.0 * y**2 + z**2)
        off = 8.0 * y * z
        out = np.empty_like(v)
        out[:-1] = diag * vy + off * vz
        out[-1] = off @ vy + np.sum(4.0 * (y**2 + 3.0 * z**2)) * vz
        return out

    x_star = np.ones(n)
    x_star[-1] = 0.0
    return ObjectiveOracle(n, f, grad, hv, name="arwhead", x0=np.ones(n), f_star=0.0, x_star=x_star)


def convex_quartic(n: int = 20) -> ObjectiveOracle:
    """Strongly convex: 0.5 x^T A x + sum(x^4)/4 - sum(x), A = tridiag(-1, 3, -1)."""

    def Av(v):
        out = 3.0 * v
        out[:-1] -= v[1:]
        out[1:] -= v[:-1]
        return out

    f = lambda x: float(0.5 * x @ Av(x) + 0.25 * np.sum(x**4) - np.sum(x))
    grad = lambda x: Av(x) + x**3 - 1.0
    hv = lambda x, v: Av(v) + 3.0 * x**2 * v

    # the minimizer is unique; a few Newton steps from 0 pin it to rounding level
    A = 3.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    xs = np.zeros(n)
    for _ in range(50):
        step = np.linalg.solve(A + np.diag(3.0 * xs**2), grad(xs))
        xs -= step
        if np.linalg.norm(step) <= 1e-15 * max(1.0, np.linalg.norm(xs)):
            break
    return ObjectiveOracle(n, f, grad, hv, name="convex-quartic", x0=np.full(n, 3.0),
                           f_star=f(xs), x_star=xs)


@dataclass(frozen=True)
class SuiteEntry:
    name: str
    n: int
    description: str
    factory: Callable[[int], ObjectiveOracle] = field(repr=False)

    def build(self) -> ObjectiveOracle:
        return self.factory(self.n)


_REGISTRY: dict[str, tuple[Callable[[int], ObjectiveOracle], int, str]] = {
    "rosenbrock": (rosenbrock, 2, "extended Rosenbrock, start (-1.2, 1, ...), minimizer ones"),
    "quadratic-1": (lambda n: log_quadratic(1.0, n, "quadratic-1"), 50, "identity quadratic, start ones"),
    "quadratic-1e3": (lambda n: log_quadratic(1e3, n, "quadratic-1e3"), 50, "diag log-spaced in [1, 1e3]"),
    "quadratic-1e6": (lambda n: log_quadratic(1e6, n, "quadratic-1e6"), 50, "diag log-spaced in [1, 1e6]"),
    "quartic-saddle": (quartic_saddle, 10, "sum x^4/4 - x^2/2, saddle at origin, f* = -n/4"),
    "trigonometric": (trigonometric, 10, "MGH trigonometric, start 1/n, f* = 0"),
    "beale": (lambda n: beale(), 2, "Beale, start (1, 1), minimizer (3, 0.5)"),
    "cosine": (cosine, 20, "chained cosine, start ones, f >= -(n-1)"),
    "arwhead": (arwhead, 100, "arrow-head quartic, start ones, minimizer (1,...,1,0)"),
    "convex-quartic": (convex_quartic, 20, "strongly convex quadratic plus quartic, start 3*ones"),
}

# (name, n) pairs making up the default benchmark suite
DEFAULT_SUITE: list[tuple[str, int]] = [
    ("rosenbrock", 2),
    ("rosenbrock", 10),
    ("rosenbrock", 100),
    ("quadratic-1", 50),
    ("quadratic-1e3", 50),
    ("quadratic-1e6", 50),
    ("quartic-saddle", 10),
    ("trigonometric", 10),
    ("beale", 2),
    ("cosine", 20),
    ("arwhead", 100),
    ("convex-quartic", 20),
]


def get_problem(name: str, n: Optional[int] = None) -> ObjectiveOracle:
    try:
        factory, default_n, _ = _REGISTRY[name]
    except KeyError:
        raise UnknownProblem(name) from None
    return factory(default_n if n is None else n)


def problem_suite(names: Optional[list[str]] = None) -> list[SuiteEntry]:
    """The native benchmark suite as (name, dimension) entries.

    ``names`` restricts the suite to the given problem names; an unknown
    name raises :class:`UnknownProblem`.
    """
    if names is not None:
        for nm in names:
            if nm not in _REGISTRY:
                raise UnknownProblem(nm)
    out = []
    for nm, n in DEFAULT_SUITE:
        if names is None or nm in names:
            factory, _, desc = _REGISTRY[nm]
            out.append(SuiteEntry(nm, n, desc, factory))
    return out


def problem_names() -> list[str]:
    return list(_REGISTRY)
