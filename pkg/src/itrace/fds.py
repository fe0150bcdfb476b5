"""Find Decrease Step: accept, expand or contract over a fixed subspace.

The subspace is represented by a *model* object exposing ``gamma0``,
``solve_tr(delta)``, ``solve_reg(lam)``, ``window(lo, hi, s_lo, s_hi)``,
``step(t)`` and ``mu(t)``.  :class:`itrace.tltr.KrylovModel` is the reduced
(Lanczos) model; the exact baseline supplies a dense full-space one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStep, FdsStall, NonFiniteObjective
from .lanczos import LanczosState
from .problems import Counters, ObjectiveOracle, eval_f_counted
from .tltr import KrylovModel

RHO_FLOOR = 1e-300
MAX_FDS_ITERS = 200


class StepClass(str, enum.Enum):
    ACCEPT = "ACCEPT"
    EXPAND = "EXPAND"
    CONTRACT = "CONTRACT"


@dataclass(frozen=True)
class FdsParams:
    eta: float = 1e-4
    sigma_lo: float = 0.01
    sigma_hi: float = 100.0
    gamma_C: float = 0.5
    gamma_lambda: float = 2.0

    def __post_init__(self):
        ok = (
            0 < self.eta < 1
            and 0 < self.sigma_lo < self.sigma_hi
            and 0 < self.gamma_C < 1
            and self.gamma_lambda > 1
        )
        if not ok:
            raise ValueError(f"invalid FDS parameters {self}")


@dataclass(frozen=True)
class FdsRecord:
    kind: StepClass
    delta: float
    lam: float
    t_norm: float
    rho: float
    sigma: float


@dataclass
class FdsResult:
    t: np.ndarray
    lam: float
    mu: float
    delta_bar: float
    sigma_bar: float
    f_trial: float
    s: np.ndarray
    trace: list[FdsRecord] = field(default_factory=list)
    n_f_used: int = 0  # counted objective evaluations spent in this call

    @property
    def n_contract(self) -> int:
        return sum(r.kind is StepClass.CONTRACT for r in self.trace)

    @property
    def n_expand(self) -> int:
        return sum(r.kind is StepClass.EXPAND for r in self.trace)


def compute_rho(f_k: float, f_trial: float, s_norm: float) -> float:
    cube = s_norm**3
    if not cube > RHO_FLOOR:
        raise DegenerateStep(f"step norm {s_norm!r} too small for the decrease ratio")
    return (f_k - f_trial) / cube


def classify_step(rho: float, lam: float, t_norm: float, sigma: float, eta: float) -> StepClass:
    if rho < eta or np.isnan(rho):
        return StepClass.CONTRACT
    if lam / t_norm <= sigma:
        return StepClass.ACCEPT
    return StepClass.EXPAND


def run_fds(
    oracle: ObjectiveOracle,
    counters: Counters,
    x_k: np.ndarray,
    f_k: float,
    state,
    t0: np.ndarray,
    lambda0: float,
    delta0: float,
    sigma0: float,
    params: FdsParams,
    max_iters: int = MAX_FDS_ITERS,
) -> FdsResult:
    """Search the current subspace for a step with rho >= eta and lam/||t|| <= sigma.

    ``state`` is a LanczosState or any model object (see module docstring).
    Each pass evaluates f once at the trial point; a non-finite trial value
    counts as a failed decrease and triggers a contraction.
    """
    model = KrylovModel(state) if isinstance(state, LanczosState) else state
    p = params
    t, lam, delta, sigma = np.asarray(t0, dtype=float), float(lambda0), float(delta0), float(sigma0)
    trace: list[FdsRecord] = []
    nf_start = counters.n_f
    for _ in range(max_iters):
        s = model.step(t)
        try:
            f_trial = eval_f_counted(oracle, counters, x_k + s)
        except NonFiniteObjective:
            f_trial = np.inf
        rho = compute_rho(f_k, f_trial, float(np.linalg.norm(s)))
        t_norm = float(np.linalg.norm(t))
        kind = classify_step(rho, lam, t_norm, sigma, p.eta)
        trace.append(FdsRecord(kind, delta, lam, t_norm, rho, sigma))

        if kind is StepClass.ACCEPT:
            return FdsResult(t, lam, model.mu(t), delta, sigma, f_trial, s, trace, counters.n_f - nf_start)

        if kind is StepClass.EXPAND:
            delta = lam / sigma
            t, lam = model.solve_tr(delta)
            continue

        if lam < p.sigma_lo * t_norm:
            lam_hat = lam + np.sqrt(p.sigma_lo * model.gamma0)
            t_hat = model.solve_reg(lam_hat)
            if lam_hat / np.linalg.norm(t_hat) <= p.sigma_hi:
                t, lam = t_hat, lam_hat
            else:
                lam, t = model.window(lam, lam_hat, p.sigma_lo, p.sigma_hi)
            delta = float(np.linalg.norm(t))
        else:
            lam_hat = p.gamma_lambda * lam
            t_hat = model.solve_reg(lam_hat)
            t_hat_norm = float(np.linalg.norm(t_hat))
            if t_hat_norm >= p.gamma_C * delta:
                t, lam, delta = t_hat, lam_hat, t_hat_norm
            else:
                delta = p.gamma_C * delta
                t, lam = model.solve_tr(delta)
        sigma = max(sigma, lam / float(np.linalg.norm(t)))
    raise FdsStall(f"no decrease step after {max_iters} trials")


def contraction_ceiling(sigma_max: float, params: FdsParams) -> int:
    """Upper bound on CONTRACT records in one call, given the largest sigma seen."""
    base = min(params.gamma_lambda, 1.0 / params.gamma_C)
    return 1 + int(np.floor(np.log(max(sigma_max, params.sigma_lo) / params.sigma_lo) / np.log(base)))


def trace_violations(res: FdsResult, params: FdsParams, sigma_max: float | None = None) -> list[str]:
    """List every structural property the trace of one call fails; empty when sound.

    ``sigma_max`` is the largest sigma seen over the whole solve (defaults to
    the largest in this call) and feeds the contraction-count ceiling.
    """
    out = []
    tr = res.trace
    kinds = [r.kind for r in tr]
    if not tr or kinds[-1] is not StepClass.ACCEPT:
        return ["trace does not end with ACCEPT"]
    if kinds.count(StepClass.EXPAND) > 1:
        out.append("more than one EXPAND")
    for i in range(1, len(tr)):
        if kinds[i] is StepClass.EXPAND and kinds[i - 1] in (StepClass.EXPAND, StepClass.CONTRACT):
            out.append(f"EXPAND at {i} follows {kinds[i - 1].value}")
        prev, cur = tr[i - 1], tr[i]
        if cur.sigma < prev.sigma:
            out.append(f"sigma decreased at {i}")
        if kinds[i - 1] is StepClass.EXPAND and cur.sigma != prev.sigma:
            out.append(f"sigma changed after EXPAND at {i}")
        if kinds[i - 1] is StepClass.CONTRACT:
            if not cur.delta < prev.delta:
                out.append(f"delta not decreased by CONTRACT at {i}")
            if cur.lam < prev.lam * (1 - 1e-12):
                out.append(f"lambda decreased by CONTRACT at {i}")
    last = tr[-1]
    if not last.rho >= params.eta:
        out.append("accepted step has rho < eta")
    # same comparison as classify_step; the multiplied form can differ by one ulp
    if not last.lam / last.t_norm <= last.sigma:
        out.append("accepted step has lambda > sigma ||t||")
    if res.n_f_used != len(tr):
        out.append(f"{res.n_f_used} function evaluations for {len(tr)} trace records")
    smax = max(r.sigma for r in tr) if sigma_max is None else sigma_max
    if res.n_contract > contraction_ceiling(smax, params):
        out.append(f"{res.n_contract} contractions exceed the ceiling")
    return out
