"""Matrix-free inexact trust-region solver with Lanczos subproblems.

Main entry points are :func:`itrace_solve` and the comparators
:func:`trace_solve` and :func:`arc_solve`; problems come from
:mod:`itrace.problems` and batch runs from :mod:`itrace.bench`.
"""

from .baselines import ArcConfig, arc_solve, arc_solve_reduced, trace_solve
from .bench import (
    Limits,
    ProfileCurve,
    RunRecord,
    SolverSpec,
    export_csv,
    export_profile_csv,
    performance_profile,
    read_csv,
    run_benchmark,
)
from .errors import ItraceError
from .fds import FdsParams, contraction_ceiling, run_fds, trace_violations
from .lanczos import LanczosState, lanczos_expand, lanczos_init, reconstruct_step, residual_norm
from .problems import (
    Counters,
    ObjectiveOracle,
    check_derivatives,
    get_problem,
    problem_names,
    problem_suite,
)
from .solver import SETTINGS, ItraceConfig, SolveResult, complexity_audit, itrace_solve, itrace_step
from .tltr import InexactnessParams, check_inexact_termination, run_tltr
from .tridiag import TridiagSym, solve_regularized, solve_trust_region

__all__ = [
    "ArcConfig", "arc_solve", "arc_solve_reduced", "trace_solve",
    "Limits", "ProfileCurve", "RunRecord", "SolverSpec", "export_csv", "export_profile_csv",
    "performance_profile", "read_csv", "run_benchmark",
    "ItraceError", "FdsParams", "contraction_ceiling", "run_fds", "trace_violations",
    "LanczosState", "lanczos_expand", "lanczos_init", "reconstruct_step", "residual_norm",
    "Counters", "ObjectiveOracle", "check_derivatives", "get_problem", "problem_names", "problem_suite",
    "SETTINGS", "ItraceConfig", "SolveResult", "complexity_audit", "itrace_solve", "itrace_step",
    "InexactnessParams", "check_inexact_termination", "run_tltr",
    "TridiagSym", "solve_regularized", "solve_trust_region",
]
