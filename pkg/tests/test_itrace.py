import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itrace.problems import Counters, ObjectiveOracle, get_problem, quadratic, rosenbrock
from itrace.solver import (
    ItraceConfig,
    complexity_audit,
    itrace_solve,
    itrace_step,
)
from itrace.tltr import InexactnessParams, check_inexact_termination


def spy(oracle):
    """Wrap an oracle so every raw call is tallied outside the solver's counters."""
    calls = {"f": 0, "g": 0, "hv": 0}

    def tally(key, fn):
        def wrapped(*args):
            calls[key] += 1
            return fn(*args)
        return wrapped

    wrapped = dataclasses.replace(
        oracle,
        eval_f=tally("f", oracle.eval_f),
        eval_grad=tally("g", oracle.eval_grad),
        hess_vec=tally("hv", oracle.hess_vec),
    )
    return wrapped, calls


def test_config_validation():
    with pytest.raises(ValueError):
        ItraceConfig(gamma_E=1.0)
    with pytest.raises(ValueError):
        ItraceConfig(delta0=0.0)
    with pytest.raises(ValueError):
        ItraceConfig(sigma0=1e3)
    with pytest.raises(ValueError):
        ItraceConfig(local_tightening="cubic")
    cfg = ItraceConfig.for_setting(3, delta0=2.0)
    assert cfg.xi == InexactnessParams(9.0, 0.9, 1e6) and cfg.delta0 == 2.0
    assert ItraceConfig().fds.eta == 1e-4 and ItraceConfig().gamma_E == 1.1


@pytest.mark.parametrize("setting,iters", [(1, 1), (2, 3), (3, 4)])
def test_quadratic_takes_newton_step(setting, iters):
    # loose settings accept one-vector steps until the gradient is small enough
    # that mu exceeds xi1 ||t||^2; the final step is the Newton step in full space
    oracle = quadratic(np.array([1.0, 2.0]))
    res = itrace_solve(oracle, np.ones(2), ItraceConfig.for_setting(setting, delta0=10.0))
    assert res.converged
    assert res.n_iters == iters
    assert [r.j for r in res.records] == [0] * (iters - 1) + [1]
    assert res.records[-1].mu == 0.0
    assert res.g_norm <= 1e-5
    np.testing.assert_allclose(res.x, 0.0, atol=1e-5)


def test_stationary_start_returns_immediately():
    res = itrace_solve(quadratic(np.ones(3)), np.zeros(3))
    assert res.converged and res.n_iters == 0
    assert (res.counters.n_f, res.counters.n_g, res.counters.n_hv) == (1, 1, 0)


def test_rosenbrock_reaches_minimizer():
    oracle = rosenbrock(2)
    res = itrace_solve(oracle, config=ItraceConfig.for_setting(2))
    assert res.converged
    assert res.g_norm <= 1e-5 * max(1.0, res.g0_norm)
    # with an absolute 1e-5 gradient stop the iterate is pinned to (1, 1)
    tight = ItraceConfig.for_setting(2, grad_tol_rel=1e-5 / res.g0_norm)
    res = itrace_solve(oracle, config=tight)
    assert res.converged
    assert np.abs(res.x - 1.0).max() <= 1e-6


def test_limits_and_errors_become_status():
    res = itrace_solve(rosenbrock(2), config=ItraceConfig(max_outer_iters=2))
    assert res.status == "MaxIters" and res.n_iters == 2
    assert res.counters.n_f > 0 and res.counters.n_hv > 0
    res = itrace_solve(rosenbrock(2), config=ItraceConfig(time_limit_s=0.0))
    assert res.status == "TimeLimit"
    bad = ObjectiveOracle(1, lambda x: np.nan, lambda x: np.ones(1), lambda x, v: v)
    res = itrace_solve(bad, np.zeros(1))
    assert res.status == "Error(NonFiniteObjective)" and not res.converged


def test_solves_are_deterministic():
    a = itrace_solve(get_problem("trigonometric", 10))
    b = itrace_solve(get_problem("trigonometric", 10))
    assert a.counters == b.counters
    np.testing.assert_array_equal(a.x, b.x)


def test_record_contracts_on_rosenbrock():
    res = itrace_solve(rosenbrock(10), config=ItraceConfig.for_setting(1))
    assert res.converged
    eta = ItraceConfig().fds.eta
    for prev, cur in zip(res.records, res.records[1:]):
        assert cur.f == prev.f_new
        assert cur.delta == max(prev.delta_bar, 1.1 * prev.s_norm)
        assert cur.sigma == prev.sigma_bar
    for r in res.records:
        assert r.f - r.f_new >= eta * r.s_norm**3 - 1e-12 * max(1.0, abs(r.f))
        # ||s|| = ||Qt|| equals the tested ||t|| up to rounding
        assert r.lam / r.s_norm <= r.sigma_bar * (1 + 1e-12)
        assert r.fds[-1].mu == r.mu


def test_complexity_audit_examples():
    assert complexity_audit([], 1e-5) == {"n_iters_above_eps": 0, "decrease_certificates": []}
    res = itrace_solve(quadratic(np.array([1.0, 2.0])), np.ones(2), ItraceConfig(delta0=10.0))
    audit = complexity_audit(res.records, 1e-5)
    assert audit["decrease_certificates"] and all(c["ok"] for c in audit["decrease_certificates"])
    res = itrace_solve(rosenbrock(2))
    audit = complexity_audit(res.records, 0.1)
    assert audit["n_iters_above_eps"] == sum(r.g_norm > 0.1 for r in res.records)
    assert len(audit["decrease_certificates"]) == res.n_iters


def test_audit_flags_a_failed_certificate():
    res = itrace_solve(rosenbrock(2))
    broken = [dataclasses.replace(res.records[0], f_new=res.records[0].f + 1.0)]
    assert complexity_audit(broken, 1e-5)["decrease_certificates"][0]["ok"] is False


@pytest.mark.parametrize("name,n", [("rosenbrock", 10), ("trigonometric", 10), ("cosine", 20),
                                    ("convex-quartic", 20), ("quadratic-1e3", 50)])
def test_product_count_matches_subspace_sizes(name, n):
    oracle, calls = spy(get_problem(name, n))
    res = itrace_solve(oracle, config=ItraceConfig.for_setting(2))
    assert res.converged
    assert calls["hv"] == res.counters.n_hv == sum(r.j + 1 for r in res.records)
    assert calls["f"] == res.counters.n_f
    assert calls["g"] == res.counters.n_g == res.n_iters + 1


def _tail_rates(g_norms):
    g = np.asarray(g_norms)
    return g[1:] / g[:-1] ** 2


def test_quadratic_tightening_gives_quadratic_rate():
    res = itrace_solve(get_problem("convex-quartic", 20),
                       config=ItraceConfig.for_setting(3, local_tightening="quadratic"))
    assert res.converged
    g = [r.g_norm for r in res.records] + [res.g_norm]
    c = _tail_rates(g[-4:])
    assert np.all(c > 0) and c.max() / c.min() < 10


def test_tightening_modes_reduce_final_residuals():
    oracle = get_problem("convex-quartic", 20)
    mus = {}
    for mode in ("off", "superlinear", "quadratic"):
        res = itrace_solve(oracle, config=ItraceConfig.for_setting(3, local_tightening=mode))
        assert res.converged
        for r in res.records:
            if mode == "superlinear":
                assert r.mu <= 0.1 * min(1.0, np.sqrt(r.g_norm)) * r.g_norm
            if mode == "quadratic":
                assert r.mu <= r.g_norm**2
        mus[mode] = sum(r.j for r in res.records)
    assert mus["off"] <= mus["superlinear"] <= mus["quadratic"]


SMALL = {"rosenbrock": 10, "beale": 2, "quartic-saddle": 10, "trigonometric": 10, "cosine": 20}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(SMALL)), st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]),
       st.booleans(), st.floats(-2, 2))
def test_accepted_step_passes_full_space_test(name, seed, setting, branch2, log_delta):
    oracle = get_problem(name, SMALL[name])
    rng = np.random.default_rng(seed)
    x = oracle.x0 + 0.5 * rng.standard_normal(oracle.n)
    g = oracle.eval_grad(x)
    cfg = ItraceConfig.for_setting(setting, branch2_enabled=branch2)
    c = Counters()
    out = itrace_step(oracle, c, x, oracle.eval_f(x), g, 10.0**log_delta, 1.0, cfg)
    H = oracle.dense_hessian(x)
    r = g + H @ out.s + out.lam * out.s
    gn = np.linalg.norm(g)
    assert abs(np.linalg.norm(r) - out.mu) <= 1e-8 * (1 + gn)
    opnorm = np.abs(np.linalg.eigvalsh(H) + out.lam).max()
    # ||H + lam I|| bounds the reduced operator norm, so this is implied by the reduced test
    assert check_inexact_termination(out.mu * (1 - 1e-10), np.linalg.norm(out.s), gn, opnorm, cfg.xi, branch2)
    assert c.n_hv == out.j + 1
    assert out.lam / np.linalg.norm(out.s) <= out.sigma_bar * (1 + 1e-12)
