"""Seeded benchmark harness: instance generation, trials, aggregation.

Seed discipline: trial t draws its instance from base_seed + t and its
shared starting point x0 from base_seed + t + X0_SEED_OFFSET, so every
solver inside a trial sees identical data and identical x0, and reruns
of the same config reproduce outputs exactly. Trials may run in parallel
(LP_EIRL1_THREADS processes); aggregation always happens in trial order.
"""

from __future__ import annotations

import dataclasses
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import check_psi_decrease
from .errors import ConfigurationError
from .kernels import RegParams
from .problems import LeastSquaresProblem, ProblemInstance
from .solvers import SOLVERS, AlphaSchedule, SolverConfig

# Fixed offset separating the x0 seed stream from the instance seed stream.
X0_SEED_OFFSET = 1_000_000_007

# Instances and starting points are drawn from numpy's default PCG64
# generator; the name is recorded in every metadata sidecar.
GENERATOR_NAME = "numpy-PCG64"


def generate_instance(m: int, n: int, K: int, sigma2: float, seed: int):
    """Random sensing instance: orthonormal-row A, K-sparse sign spikes, noisy y.

    A starts iid standard normal, then its rows are orthonormalized by a
    reduced QR of A^T (so A A^T = I). x_true has K entries of +-1 at
    uniformly chosen positions; y = A x_true + noise with variance sigma2.
    Returns (A, x_true, y).
    """
    if m < 1 or n < 1:
        raise ConfigurationError(f"m and n must be >= 1, got m={m}, n={n}")
    if m >= n:
        raise ConfigurationError(f"m must be < n for an underdetermined instance, got m={m}, n={n}")
    if not (0 <= K <= n):
        raise ConfigurationError(f"K must lie in [0, n], got K={K} with n={n}")
    if sigma2 < 0:
        raise ConfigurationError(f"sigma2 must be >= 0, got {sigma2}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, n))
    Q, _ = np.linalg.qr(G.T)  # n x m with orthonormal columns
    A = np.ascontiguousarray(Q.T)
    x_true = np.zeros(n)
    if K:
        pos = rng.choice(n, size=K, replace=False)
        x_true[pos] = rng.integers(0, 2, size=K) * 2.0 - 1.0
    y = A @ x_true
    if sigma2 > 0:
        y = y + np.sqrt(sigma2) * rng.standard_normal(m)
    return A, x_true, y


@dataclass(frozen=True)
class ExperimentSpec:
    m: int = 256
    n: int = 512
    K: int = 25
    sigma2: float = 1e-4
    reg: RegParams = field(default_factory=lambda: RegParams(p=0.5, lam=0.05))
    solver_set: tuple = field(default_factory=lambda: (("eirl1", SolverConfig()),))
    trials: int = 20
    base_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if not self.solver_set:
            raise ConfigurationError("solver_set must not be empty")
        for kind, cfg in self.solver_set:
            if kind not in SOLVERS:
                raise ConfigurationError(
                    f"unknown solver {kind!r}; choices are {sorted(SOLVERS)}"
                )
            if not isinstance(cfg, SolverConfig):
                raise ConfigurationError(f"solver entry {kind!r} needs a SolverConfig")

    def solver_ids(self) -> list[str]:
        """Stable human-readable id per entry; alpha tag when momentum applies."""
        ids = []
        for kind, cfg in self.solver_set:
            if kind in ("eirl1", "irl2"):
                ids.append(f"{kind}_a{cfg.alpha_schedule.tag()}")
            else:
                ids.append(kind)
        seen: dict[str, int] = {}
        out = []
        for s in ids:
            seen[s] = seen.get(s, 0) + 1
            out.append(s if seen[s] == 1 else f"{s}_{seen[s]}")
        return out


@dataclass(frozen=True)
class TrialSummary:
    seed: int
    solver: str
    iterations: int
    converged: bool
    final_mse: float
    final_support_size: int
    invariant_violations: int
    wall_time: float  # in-memory only; never serialized (breaks determinism)


@dataclass(frozen=True)
class SolverStats:
    mean_mse_curve: np.ndarray
    median_mse_curve: np.ndarray
    support_size_quartiles: tuple
    mean_final_support_size: float
    mean_final_mse: float
    median_iterations: float
    converged_trials: int


@dataclass(frozen=True)
class AggregateStats:
    per_solver: dict


def _run_trial(spec: ExperimentSpec, t: int):
    """Worker: one trial, every solver, full traces kept local."""
    seed = spec.base_seed + t
    A, x_true, y = generate_instance(spec.m, spec.n, spec.K, spec.sigma2, seed)
    problem = ProblemInstance(LeastSquaresProblem(A, y), spec.reg)
    x0 = np.random.default_rng(seed + X0_SEED_OFFSET).standard_normal(spec.n)
    ids = spec.solver_ids()
    out = []
    for sid, (kind, cfg) in zip(ids, spec.solver_set):
        cfg_full = dataclasses.replace(cfg, trace_level="full")
        t0 = time.perf_counter()
        try:
            result = SOLVERS[kind](problem, x0, cfg_full, x_true=x_true)
        except Exception as exc:  # a failed trial is recorded, not fatal
            out.append((sid, None, None, repr(exc)))
            continue
        wall = time.perf_counter() - t0
        if kind in ("eirl1", "irl1"):
            violations = len(
                check_psi_decrease(result.trace, cfg.beta, cfg.alpha_schedule.alpha_bar)
            )
        else:
            violations = 0  # the psi decrease model covers the reweighted-l1 family
        curve = np.array([r.mse for r in result.trace], dtype=np.float64)
        summary = TrialSummary(
            seed=seed,
            solver=sid,
            iterations=result.iterations,
            converged=result.converged,
            final_mse=float(curve[-1]),
            final_support_size=result.trace[-1].support_size,
            invariant_violations=violations,
            wall_time=wall,
        )
        out.append((sid, summary, curve, None))
    return out


def _thread_budget() -> int:
    raw = os.environ.get("LP_EIRL1_THREADS", "").strip()
    if not raw:
        return 1
    try:
        v = int(raw)
    except ValueError:
        raise ConfigurationError(f"LP_EIRL1_THREADS must be an integer, got {raw!r}") from None
    return max(1, v)


def run_experiment(spec: ExperimentSpec):
    """Run all trials; returns (summaries, AggregateStats, failures).

    summaries is trial-major ordered. failures maps (trial seed, solver id)
    to the error text of any trial that raised instead of finishing.
    """
    workers = min(_thread_budget(), spec.trials)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trial_outputs = list(pool.map(_run_trial, [spec] * spec.trials, range(spec.trials)))
    else:
        trial_outputs = [_run_trial(spec, t) for t in range(spec.trials)]

    summaries: list[TrialSummary] = []
    failures: dict = {}
    curves: dict[str, list[np.ndarray]] = {sid: [] for sid in spec.solver_ids()}
    for t, rows in enumerate(trial_outputs):
        for sid, summary, curve, err in rows:
            if err is not None:
                failures[(spec.base_seed + t, sid)] = err
                continue
            summaries.append(summary)
            curves[sid].append(curve)

    per_solver = {}
    for sid in spec.solver_ids():
        rows = [s for s in summaries if s.solver == sid]
        if not rows:
            continue
        cs = curves[sid]
        width = max(c.shape[0] for c in cs)
        # right-extend each trial's curve with its final value before averaging
        padded = np.vstack([
            np.concatenate([c, np.full(width - c.shape[0], c[-1])]) for c in cs
        ])
        sizes = [s.final_support_size for s in rows]
        per_solver[sid] = SolverStats(
            mean_mse_curve=padded.mean(axis=0),
            median_mse_curve=np.median(padded, axis=0),
            support_size_quartiles=tuple(
                float(q) for q in np.percentile(sizes, [0, 25, 50, 75, 100])
            ),
            mean_final_support_size=float(np.mean(sizes)),
            mean_final_mse=float(np.mean([s.final_mse for s in rows])),
            median_iterations=float(np.median([s.iterations for s in rows])),
            converged_trials=sum(1 for s in rows if s.converged),
        )
    return summaries, AggregateStats(per_solver=per_solver), failures


def alpha_sweep(spec: ExperimentSpec, alphas) -> dict:
    """Re-run the experiment once per constant momentum value.

    The first solver entry is the template; only its alpha changes, and
    every alpha sees identical seeds, instances, and starting points.
    Returns {alpha: AggregateStats}.
    """
    alphas = list(alphas)
    if not alphas:
        raise ConfigurationError("alpha_sweep needs at least one alpha")
    kind, template = spec.solver_set[0]
    out = {}
    for a in alphas:
        cfg = dataclasses.replace(template, alpha_schedule=AlphaSchedule.constant(a))
        sub = dataclasses.replace(spec, solver_set=((kind, cfg),))
        _, stats, _ = run_experiment(sub)
        out[a] = stats
    return out
