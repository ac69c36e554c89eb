"""Iterative solvers for min f(x) + lam * sum_i |x_i|^p with 0 < p < 1.

Four methods share one driver:

* eirl1 : extrapolated iteratively reweighted l1 (momentum + weighted soft
          thresholding + geometrically shrinking smoothing eps)
* irl1  : the same with momentum pinned to zero
* irl2  : iteratively reweighted l2; the subproblem is a diagonal quadratic
          solved in closed form, same eps schedule, momentum honored
* ijt   : iterative jumping thresholding, a proximal gradient step with the
          exact lp prox (only p = 1/2 and 2/3 have closed forms)

Termination everywhere: ||x^k - x^{k-1}|| / ||x^k|| <= opttol, with the
absolute comparison ||x^k - x^{k-1}|| <= opttol when ||x^k|| = 0.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    InvalidInputError,
    LipschitzMarginWarning,
)
from .kernels import (
    EPS_FLOOR,
    W_MAX,
    as_vector,
    compute_weights,
    extrapolate,
    lp_prox,
    prox_weighted_l1,
    smoothed_objective,
    stationarity_residual,
    sign_pattern,
)
from .problems import ProblemInstance
from .trace import IterationRecord, hash_sign_pattern, hash_support, mse

TRACE_LEVELS = ("none", "summary", "full")
TERMINATION_REASONS = ("opttol_met", "max_iter", "numerical_failure")

# Cadence for the expensive per-record extras at trace level "full":
# stationarity residuals and full-vector snapshots.
SNAPSHOT_EVERY = 50


@dataclass(frozen=True)
class AlphaSchedule:
    """Extrapolation schedule: a constant value in [0, 1) or nesterov tapering.

    nesterov: alpha_0 = 0, alpha_k = (k - 1) / (k + 2) for k >= 1.
    """

    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "nesterov"):
            raise ConfigurationError(f"unknown alpha schedule kind {self.kind!r}")
        if self.kind == "constant" and not (0.0 <= self.value < 1.0):
            raise ConfigurationError(
                f"constant alpha must lie in [0, 1), got {self.value}"
            )

    @classmethod
    def constant(cls, value: float) -> "AlphaSchedule":
        return cls(kind="constant", value=float(value))

    @classmethod
    def nesterov(cls) -> "AlphaSchedule":
        return cls(kind="nesterov")

    @classmethod
    def parse(cls, text: str) -> "AlphaSchedule":
        """Parse 'nesterov' or a real number in [0, 1)."""
        s = str(text).strip().lower()
        if s == "nesterov":
            return cls.nesterov()
        try:
            v = float(s)
        except ValueError:
            raise ConfigurationError(
                f"alpha must be a real in [0, 1) or 'nesterov', got {text!r}"
            ) from None
        return cls.constant(v)

    def alpha_at(self, k: int) -> float:
        if k < 0:
            raise ConfigurationError(f"iteration index must be >= 0, got {k}")
        if self.kind == "constant":
            return self.value
        if k == 0:
            return 0.0
        return (k - 1.0) / (k + 2.0)

    @property
    def alpha_bar(self) -> float:
        """Supremum of the schedule (1.0 for nesterov)."""
        return self.value if self.kind == "constant" else 1.0

    def tag(self) -> str:
        return "nesterov" if self.kind == "nesterov" else f"{self.value:g}"


@dataclass(frozen=True)
class SolverConfig:
    beta: float = 1.0
    mu: float = 0.9
    eps0: float = 1.0
    alpha_schedule: AlphaSchedule = AlphaSchedule(kind="constant", value=0.9)
    opttol: float = 1e-6
    max_iter: int = 5000
    trace_level: str = "summary"

    def __post_init__(self):
        if not (self.beta > 0.0) or not np.isfinite(self.beta):
            raise ConfigurationError(f"beta must be positive and finite, got {self.beta}")
        if not (0.0 < self.mu < 1.0):
            raise ConfigurationError(f"mu must lie in (0, 1), got {self.mu}")
        if not (self.eps0 > 0.0) or not np.isfinite(self.eps0):
            raise ConfigurationError(f"eps0 must be positive and finite, got {self.eps0}")
        if not (self.opttol > 0.0):
            raise ConfigurationError(f"opttol must be positive, got {self.opttol}")
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.trace_level not in TRACE_LEVELS:
            raise ConfigurationError(
                f"trace_level must be one of {TRACE_LEVELS}, got {self.trace_level!r}"
            )


@dataclass
class IterateState:
    """Full algorithm state after k completed iterations."""

    x: np.ndarray
    x_prev: np.ndarray
    eps: np.ndarray
    k: int


@dataclass
class SolveResult:
    x_final: np.ndarray
    iterations: int
    converged: bool
    termination_reason: str
    trace: list[IterationRecord]


def eirl1_step(
    state: IterateState, problem: ProblemInstance, config: SolverConfig, alpha_k: float
) -> IterateState:
    """One reweighted-l1 step: weights, extrapolate, prox, shrink eps."""
    w = compute_weights(state.x, state.eps, problem.reg)
    y = extrapolate(state.x, state.x_prev, alpha_k)
    g = problem.smooth.gradient(y)
    x_next = prox_weighted_l1(g, y, w, config.beta, problem.reg.lam)
    eps_next = np.maximum(config.mu * state.eps, EPS_FLOOR)
    return IterateState(x=x_next, x_prev=state.x, eps=eps_next, k=state.k + 1)


def _irl2_step(state, problem, config, alpha_k):
    # diagonal quadratic majorizer: weights v_i = (p/2)(x_i^2 + eps_i)^(p/2-1)
    reg = problem.reg
    v = np.minimum(
        0.5 * reg.p * np.power(state.x * state.x + state.eps, 0.5 * reg.p - 1.0), W_MAX
    )
    y = extrapolate(state.x, state.x_prev, alpha_k)
    g = problem.smooth.gradient(y)
    z = y - g / config.beta
    x_next = config.beta * z / (config.beta + 2.0 * reg.lam * v)
    eps_next = np.maximum(config.mu * state.eps, EPS_FLOOR)
    return IterateState(x=x_next, x_prev=state.x, eps=eps_next, k=state.k + 1)


def _ijt_step(state, problem, config, alpha_k):
    # plain proximal gradient with the exact lp prox; no eps, no momentum
    g = problem.smooth.gradient(state.x)
    z = state.x - g / config.beta
    x_next = lp_prox(z, problem.reg.p, problem.reg.lam / config.beta)
    return IterateState(x=x_next, x_prev=state.x, eps=state.eps, k=state.k + 1)


class _Recorder:
    """Builds the trace per trace_level; owns the snapshot/stationarity cadence."""

    def __init__(self, problem, config, x_true, x_ref):
        self.problem = problem
        self.config = config
        self.x_true = x_true
        self.x_ref = x_ref
        self.level = config.trace_level
        self.records: list[IterationRecord] = []

    def _stationarity(self, x):
        # the gradient may overflow at an iterate kept by the failure path
        try:
            return stationarity_residual(x, self.problem)
        except InvalidInputError:
            return None

    def _build(self, state, *, want_stationarity: bool, want_snapshot: bool):
        x = state.x
        d = x - state.x_prev
        step = float(np.sqrt(d @ d))
        xn = float(np.linalg.norm(x))
        rel = step / xn if xn > 0.0 else step
        f_eps = smoothed_objective(x, state.eps, self.problem)
        psi = f_eps + 0.5 * self.config.beta * step * step
        signs = sign_pattern(x)
        on = signs != 0
        support = int(np.count_nonzero(on))
        min_nz = float(np.min(np.abs(x[on]))) if support else None
        return IterationRecord(
            k=state.k,
            F_eps=f_eps,
            psi=psi,
            step_norm=step,
            rel_step=rel,
            support_size=support,
            sign_hash=hash_sign_pattern(signs),
            support_hash=hash_support(signs),
            eps_norm1=float(np.sum(state.eps)),
            min_nonzero=min_nz,
            stationarity=(self._stationarity(x) if want_stationarity else None),
            mse=(mse(x, self.x_true) if self.x_true is not None else None),
            dist_ref=(
                float(np.linalg.norm(x - self.x_ref)) if self.x_ref is not None else None
            ),
            x=(x.copy() if want_snapshot else None),
        )

    def record(self, state) -> None:
        if self.level == "none":
            return
        if self.level == "summary" and state.k != 0:
            return
        cadence = state.k % SNAPSHOT_EVERY == 0
        self.records.append(
            self._build(
                state,
                want_stationarity=(self.level == "full" and cadence),
                want_snapshot=cadence,
            )
        )

    def finalize(self, state) -> None:
        """Guarantee the final iterate's record exists with residual and snapshot."""
        if self.level == "none":
            return
        final = self._build(state, want_stationarity=True, want_snapshot=True)
        if self.records and self.records[-1].k == state.k:
            self.records[-1] = final
        else:
            self.records.append(final)


def _solve(problem, x0, config, step_fn, *, uses_eps, x_true=None, x_ref=None):
    if config is None:
        config = SolverConfig()
    x0 = as_vector(x0, "x0")
    n = problem.smooth.dimension()
    if x0.shape[0] != n:
        raise DimensionMismatchError(f"x0 has length {x0.shape[0]}, expected {n}")

    lips = problem.smooth.lipschitz_constant()
    if config.beta <= lips * (1.0 + 1e-8):
        warnings.warn(
            f"beta = {config.beta} does not exceed the estimated gradient "
            f"Lipschitz constant {lips}; the descent guarantee needs beta > L",
            LipschitzMarginWarning,
            stacklevel=3,
        )

    eps0 = np.full(n, config.eps0) if uses_eps else np.zeros(n)
    state = IterateState(x=x0.copy(), x_prev=x0.copy(), eps=eps0, k=0)
    recorder = _Recorder(problem, config, x_true, x_ref)
    recorder.record(state)

    reason = "max_iter"
    while state.k < config.max_iter:
        alpha_k = config.alpha_schedule.alpha_at(state.k)
        try:
            new_state = step_fn(state, problem, config, alpha_k)
        except InvalidInputError:
            # a gradient or intermediate went non-finite mid-run
            reason = "numerical_failure"
            break
        if not np.all(np.isfinite(new_state.x)):
            reason = "numerical_failure"
            break  # keep the last finite state; trace stays partial
        state = new_state
        recorder.record(state)
        with np.errstate(over="ignore"):  # non-finite steps are handled below
            d = state.x - state.x_prev
            step = float(np.sqrt(d @ d))
            xn = float(np.linalg.norm(state.x))
        if not (np.isfinite(step) and np.isfinite(xn)):
            continue  # an overflowed norm cannot certify convergence
        if (step <= config.opttol * xn) if xn > 0.0 else (step <= config.opttol):
            reason = "opttol_met"
            break
    recorder.finalize(state)
    return SolveResult(
        x_final=state.x.copy(),
        iterations=state.k,
        converged=(reason == "opttol_met"),
        termination_reason=reason,
        trace=recorder.records,
    )


def solve_eirl1(problem, x0, config=None, *, x_true=None, x_ref=None) -> SolveResult:
    """Extrapolated iteratively reweighted l1."""
    return _solve(problem, x0, config, eirl1_step, uses_eps=True, x_true=x_true, x_ref=x_ref)


def solve_irl1(problem, x0, config=None, *, x_true=None, x_ref=None) -> SolveResult:
    """Reweighted l1 without extrapolation: eirl1 with alpha pinned to 0."""
    if config is None:
        config = SolverConfig()
    config = dataclasses.replace(config, alpha_schedule=AlphaSchedule.constant(0.0))
    return solve_eirl1(problem, x0, config, x_true=x_true, x_ref=x_ref)


def solve_irl2(problem, x0, config=None, *, x_true=None, x_ref=None) -> SolveResult:
    """Iteratively reweighted l2 with the same eps schedule and momentum."""
    return _solve(problem, x0, config, _irl2_step, uses_eps=True, x_true=x_true, x_ref=x_ref)


def solve_ijt(problem, x0, config=None, *, x_true=None, x_ref=None) -> SolveResult:
    """Iterative jumping thresholding; requires p = 1/2 or p = 2/3."""
    p = problem.reg.p
    if not (abs(p - 0.5) < 1e-12 or abs(p - 2.0 / 3.0) < 1e-12):
        raise ConfigurationError(
            f"ijt supports only p = 1/2 and p = 2/3 (closed-form prox), got p={p}"
        )
    return _solve(problem, x0, config, _ijt_step, uses_eps=False, x_true=x_true, x_ref=x_ref)


SOLVERS = {
    "eirl1": solve_eirl1,
    "irl1": solve_irl1,
    "irl2": solve_irl2,
    "ijt": solve_ijt,
}
