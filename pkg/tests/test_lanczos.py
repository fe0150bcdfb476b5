import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itrace.errors import BreakdownExpand, DimensionError, NotPositiveDefinite, ZeroGradient
from itrace.lanczos import (
    condition_diagnostic,
    lanczos_expand,
    lanczos_init,
    reconstruct_step,
    residual_norm,
)
from itrace.tridiag import solve_trust_region
from oracles import model_value, trust_region_dual_optimum

R2 = np.sqrt(2.0)


def matvec(H):
    return lambda v: H @ v


def build(H, g, j):
    state = lanczos_init(g, matvec(H))
    for _ in range(j):
        if state.breakdown:
            break
        state = lanczos_expand(state, matvec(H))
    return state


def random_problem(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T), rng.standard_normal(n)


def test_init_example():
    s = lanczos_init(np.array([1.0, 1.0]), matvec(np.diag([2.0, 3.0])))
    assert s.gamma0 == pytest.approx(R2)
    np.testing.assert_allclose(s.Q[:, 0], [1 / R2, 1 / R2])
    assert s.theta[0] == pytest.approx(2.5)
    np.testing.assert_allclose(s.y_next, [-1 / (2 * R2), 1 / (2 * R2)])
    assert s.gamma_next == pytest.approx(0.5)
    assert s.j == 0 and not s.breakdown


def test_init_breakdown_on_eigenvector():
    s = lanczos_init(np.array([0.3, -4.0, 1.0]), matvec(2.0 * np.eye(3)))
    assert s.theta[0] == pytest.approx(2.0)
    assert s.gamma_next == 0.0 and s.breakdown
    np.testing.assert_array_equal(s.y_next, 0.0)
    s = lanczos_init(np.array([1.0, 0.0]), matvec(np.diag([1.0, -1.0])))
    assert s.theta[0] == 1.0 and s.gamma_next == 0.0
    with pytest.raises(BreakdownExpand):
        lanczos_expand(s, matvec(np.diag([1.0, -1.0])))


def test_init_zero_gradient():
    with pytest.raises(ZeroGradient):
        lanczos_init(np.zeros(3), matvec(np.eye(3)))


def test_expand_example():
    H = np.diag([2.0, 3.0])
    s = lanczos_expand(lanczos_init(np.array([1.0, 1.0]), matvec(H)), matvec(H))
    np.testing.assert_allclose(s.theta, [2.5, 2.5])
    np.testing.assert_allclose(s.gamma, [0.5])
    np.testing.assert_allclose(np.linalg.eigvalsh(s.T.to_dense()), [2.0, 3.0])
    # the Krylov dimension is capped at n
    assert s.gamma_next == 0.0 and s.j == 1


def test_each_step_uses_one_product():
    rng = np.random.default_rng(0)
    H, g = random_problem(rng, 8)
    calls = []

    def hv(v):
        calls.append(v)
        return H @ v

    s = lanczos_init(g, hv)
    for _ in range(4):
        s = lanczos_expand(s, hv)
    assert len(calls) == 5 == s.j + 1


def test_reconstruct_step_examples():
    H = np.diag([2.0, 3.0])
    g = np.array([1.0, 1.0])
    s0 = lanczos_init(g, matvec(H))
    np.testing.assert_allclose(reconstruct_step(s0, np.array([2.5])), 2.5 * g / R2)
    np.testing.assert_array_equal(reconstruct_step(s0, np.zeros(1)), 0.0)
    s1 = lanczos_expand(s0, matvec(H))
    np.testing.assert_allclose(reconstruct_step(s1, np.ones(2)), [0.0, R2], atol=1e-15)
    with pytest.raises(DimensionError):
        reconstruct_step(s1, np.ones(3))


def test_residual_norm_examples():
    H = np.diag([2.0, 3.0])
    s = lanczos_init(np.array([1.0, 1.0]), matvec(H))
    assert residual_norm(s, np.array([-0.4])) == pytest.approx(0.2)
    sol = solve_trust_region(s.T, s.gamma0, 10.0)
    np.testing.assert_allclose(sol.t, [-R2 / 2.5])
    assert residual_norm(s, sol.t) == pytest.approx(0.5 * R2 / 2.5)
    assert residual_norm(s, sol.t) == pytest.approx(0.28284, abs=1e-5)
    b = lanczos_init(np.array([1.0, 0.0]), matvec(np.eye(2)))
    assert residual_norm(b, np.array([123.0])) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1), st.data())
def test_invariants_and_residual_identity(n, seed, data):
    rng = np.random.default_rng(seed)
    H, g = random_problem(rng, n)
    j = data.draw(st.integers(0, n - 1))
    s = build(H, g, j)
    Q = s.Q
    assert np.abs(Q.T @ Q - np.eye(s.j + 1)).max() <= 1e-10
    np.testing.assert_allclose(s.T.to_dense(), Q.T @ H @ Q, atol=1e-8 * np.abs(H).max() * n)
    e1 = np.zeros(s.j + 1)
    e1[0] = s.gamma0
    np.testing.assert_allclose(Q.T @ g, e1, atol=1e-10 * s.gamma0)

    delta = 10 ** rng.uniform(-2, 1)
    sol = solve_trust_region(s.T, s.gamma0, delta)
    step = reconstruct_step(s, sol.t)
    r = g + H @ step + sol.lam * step
    mu = residual_norm(s, sol.t)
    assert abs(np.linalg.norm(r) - mu) <= 1e-8 * (1 + np.linalg.norm(g))
    # explicit r carries rounding of size eps*||H||*||s||, hence the floor term
    sn = np.linalg.norm(step)
    floor = 1e-12 * (1 + np.abs(H).max() * n + sol.lam) * sn**2
    assert abs(r @ step) <= 1e-10 * np.linalg.norm(r) * sn + floor
    assert np.linalg.norm(step) == pytest.approx(np.linalg.norm(sol.t), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_breakdown_solution_is_global(n, seed):
    rng = np.random.default_rng(seed)
    H, g = random_problem(rng, n)
    s = build(H, g, n)
    assert s.breakdown
    delta = 10 ** rng.uniform(-1, 1)
    sol = solve_trust_region(s.T, s.gamma0, delta)
    step = reconstruct_step(s, sol.t)
    assert model_value(H, g, step) == pytest.approx(trust_region_dual_optimum(H, g, delta), abs=1e-8)


def test_condition_diagnostic_examples():
    s = lanczos_init(np.array([1.0]), matvec(np.array([[4.0]])))
    d = condition_diagnostic(s, 0.0)
    assert d["kappa"] == 1.0
    # j = 0: the power is 1, bound = 2 gamma0 H_est kappa / (w_max + lam)
    assert d["residual_bound"] == pytest.approx(2 * 1.0 * 4.0 * 1.0 / 4.0)

    H = np.array([[0.0, 1.0], [1.0, 0.0]])
    s2 = build(H, np.array([1.0, 0.0]), 1)
    np.testing.assert_allclose(s2.T.to_dense(), H, atol=1e-15)
    assert condition_diagnostic(s2, 2.0)["kappa"] == pytest.approx(3.0)
    with pytest.raises(NotPositiveDefinite):
        condition_diagnostic(s2, 0.5)


def test_kappa_one_kills_bound_after_first_step():
    # T = I: the rate factor is 0 for j >= 1
    s = build(np.eye(3) + np.diag([0.0, 1e-3, 0.0]), np.array([1.0, 1.0, 0.0]), 1)
    d = condition_diagnostic(s, 1e6)
    assert d["kappa"] == pytest.approx(1.0, abs=1e-8)
    assert d["residual_bound"] <= 1e-8
