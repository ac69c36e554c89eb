"""Solvers, diagnostics, and benchmarks for lp-quasi-norm regularized least squares."""

from .bench import (
    AggregateStats,
    ExperimentSpec,
    SolverStats,
    TrialSummary,
    alpha_sweep,
    generate_instance,
    run_experiment,
)
from .diagnostics import (
    RateFit,
    StabilizationReport,
    check_psi_decrease,
    detect_stabilization,
    diagnose_document,
    fit_rate,
    tail_sum,
)
from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    EstimationError,
    FileFormatError,
    InvalidInputError,
    LipschitzMarginWarning,
)
from .estimators import LpRegression
from .kernels import (
    EPS_FLOOR,
    W_MAX,
    RegParams,
    compute_weights,
    extrapolate,
    half_threshold,
    lp_prox,
    prox_optimality_residual,
    prox_weighted_l1,
    proximal_surrogate,
    sign_pattern,
    smoothed_objective,
    stationarity_residual,
    two_thirds_threshold,
)
from .problems import (
    LeastSquaresProblem,
    ProblemInstance,
    SmoothTerm,
    estimate_lipschitz,
    grad_check,
)
from .solvers import (
    SOLVERS,
    AlphaSchedule,
    IterateState,
    SolveResult,
    SolverConfig,
    eirl1_step,
    solve_eirl1,
    solve_ijt,
    solve_irl1,
    solve_irl2,
)
from .trace import IterationRecord, read_trace_csv, write_trace_csv

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "AlphaSchedule",
    "ConfigurationError",
    "DimensionMismatchError",
    "EPS_FLOOR",
    "EstimationError",
    "ExperimentSpec",
    "FileFormatError",
    "InvalidInputError",
    "IterateState",
    "IterationRecord",
    "LeastSquaresProblem",
    "LipschitzMarginWarning",
    "LpRegression",
    "ProblemInstance",
    "RateFit",
    "RegParams",
    "SOLVERS",
    "SmoothTerm",
    "SolveResult",
    "SolverConfig",
    "SolverStats",
    "StabilizationReport",
    "TrialSummary",
    "W_MAX",
    "alpha_sweep",
    "check_psi_decrease",
    "compute_weights",
    "detect_stabilization",
    "diagnose_document",
    "eirl1_step",
    "estimate_lipschitz",
    "extrapolate",
    "fit_rate",
    "generate_instance",
    "grad_check",
    "half_threshold",
    "lp_prox",
    "prox_optimality_residual",
    "prox_weighted_l1",
    "proximal_surrogate",
    "read_trace_csv",
    "run_experiment",
    "sign_pattern",
    "smoothed_objective",
    "solve_eirl1",
    "solve_ijt",
    "solve_irl1",
    "solve_irl2",
    "stationarity_residual",
    "tail_sum",
    "two_thirds_threshold",
    "write_trace_csv",
    "__version__",
]
