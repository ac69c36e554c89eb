"""Empirical checks of the convergence theory against recorded traces.

All functions work on sequences of IterationRecord, whether produced
in-process or parsed back from a trace CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .trace import IterationRecord

# Distances below this are treated as converged-to-reference noise and
# excluded from rate fitting.
DIST_FLOOR = 1e-14


@dataclass(frozen=True)
class PsiViolation:
    k: int
    observed_drop: float
    required_drop: float


@dataclass(frozen=True)
class StabilizationReport:
    support_stable_from: int | None
    sign_stable_from: int | None
    min_nonzero_magnitude_after_stable: float | None


@dataclass(frozen=True)
class RateFit:
    gamma_hat: float | None
    r2: float | None
    tail_fraction: float
    points: int


def check_psi_decrease(trace, beta: float, alpha_bar: float) -> list[PsiViolation]:
    """Sufficient-decrease audit of the proximal surrogate psi.

    For consecutive records k, k+1 the drop psi_k - psi_{k+1} must be at
    least (beta/2) * (1 - alpha_bar^2) * step_norm_k^2, up to a slack of
    1e-8 * (1 + |psi_k|) for floating-point accumulation. Returns every
    violating k (empty list = clean run).
    """
    records = list(trace)
    if len(records) < 2:
        raise InvalidInputError("psi decrease check needs at least 2 records")
    if not (0.0 <= alpha_bar <= 1.0):
        raise InvalidInputError(f"alpha_bar must lie in [0, 1], got {alpha_bar}")
    coeff = 0.5 * beta * (1.0 - alpha_bar * alpha_bar)
    out: list[PsiViolation] = []
    for a, b in zip(records, records[1:]):
        if b.k != a.k + 1:
            continue  # sparse traces have gaps; only adjacent pairs are testable
        drop = a.psi - b.psi
        required = coeff * a.step_norm * a.step_norm
        slack = 1e-8 * (1.0 + abs(a.psi))
        if drop < required - slack:
            out.append(PsiViolation(k=a.k, observed_drop=drop, required_drop=required))
    return out


def detect_stabilization(trace) -> StabilizationReport:
    """Find the iterations after which support and sign pattern stop changing.

    An index is reported only when the final pattern already held on the
    step into the last record; if the pattern changed on the last recorded
    step the corresponding field is None.
    """
    records = list(trace)
    if not records:
        raise InvalidInputError("stabilization detection needs a nonempty trace")

    def stable_from(values):
        if len(values) == 1:
            return records[0].k
        if values[-1] != values[-2]:
            return None
        i = len(values) - 1
        while i > 0 and values[i - 1] == values[-1]:
            i -= 1
        return records[i].k

    support_from = stable_from([r.support_hash for r in records])
    sign_from = stable_from([r.sign_hash for r in records])

    min_nz = None
    if sign_from is not None:
        mags = [
            r.min_nonzero
            for r in records
            if r.k >= sign_from and r.min_nonzero is not None
        ]
        min_nz = min(mags) if mags else None
    return StabilizationReport(
        support_stable_from=support_from,
        sign_stable_from=sign_from,
        min_nonzero_magnitude_after_stable=min_nz,
    )


def tail_sum(trace, from_k: int) -> float:
    """Sum of step norms over recorded iterations k >= from_k."""
    records = list(trace)
    if not records:
        raise InvalidInputError("tail_sum needs a nonempty trace")
    if from_k > records[-1].k:
        raise InvalidInputError(
            f"from_k = {from_k} is beyond the last recorded iteration {records[-1].k}"
        )
    return float(sum(r.step_norm for r in records if r.k >= from_k))


def _distances(records, x_ref):
    """(k, distance) pairs: recorded dist_ref when present, else snapshot-based."""
    if any(r.dist_ref is not None for r in records):
        return [(r.k, r.dist_ref) for r in records if r.dist_ref is not None]
    if x_ref is None:
        return []
    x_ref = np.asarray(x_ref, dtype=np.float64)
    out = []
    for r in records:
        if r.x is not None:
            out.append((r.k, float(np.linalg.norm(r.x - x_ref))))
    return out


def fit_rate(trace, x_ref=None, tail_fraction: float = 1.0) -> RateFit:
    """Least-squares estimate of the linear convergence factor.

    Fits log ||x^k - x_ref|| against k over the trailing tail_fraction of
    the recorded iteration range and reports gamma_hat = exp(slope) with
    the r^2 of the line fit. Distances come from per-record dist_ref
    scalars when the solver tracked a reference, otherwise from stored
    snapshots against x_ref. Underflowed distances (< 1e-14) are excluded;
    fewer than 5 usable points, or a non-contracting fit, yields
    gamma_hat None.
    """
    if not (0.0 < tail_fraction <= 1.0):
        raise InvalidInputError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    records = list(trace)
    if not records:
        raise InvalidInputError("rate fitting needs a nonempty trace")
    pairs = _distances(records, x_ref)
    pairs = [(k, d) for k, d in pairs if d >= DIST_FLOOR]
    if pairs:
        k_first, k_last = pairs[0][0], pairs[-1][0]
        cut = k_last - tail_fraction * (k_last - k_first)
        pairs = [(k, d) for k, d in pairs if k >= cut]
    if len(pairs) < 5:
        return RateFit(gamma_hat=None, r2=None, tail_fraction=tail_fraction, points=len(pairs))
    ks = np.array([k for k, _ in pairs], dtype=np.float64)
    logs = np.log([d for _, d in pairs])
    slope, intercept = np.polyfit(ks, logs, 1)
    pred = slope * ks + intercept
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    gamma = math.exp(slope)
    if not (0.0 < gamma < 1.0):
        gamma = None
    return RateFit(gamma_hat=gamma, r2=r2, tail_fraction=tail_fraction, points=len(pairs))


def diagnose_document(
    trace,
    beta: float,
    alpha_bar: float,
    tail_fraction: float = 0.5,
    x_ref=None,
    rate_from: int | None = None,
) -> dict:
    """Bundle every diagnostic into one JSON-ready document.

    rate_from: starting iteration for the rate fit; defaults to the sign
    stabilization index when one exists, else the first record.
    """
    records = list(trace)
    violations = check_psi_decrease(records, beta, alpha_bar)
    stab = detect_stabilization(records)
    last_k = records[-1].k
    tail_start = max(records[0].k, int(math.ceil(last_k * 0.9)))
    if rate_from is None:
        rate_from = stab.sign_stable_from if stab.sign_stable_from is not None else records[0].k
    rate = fit_rate([r for r in records if r.k >= rate_from], x_ref, tail_fraction)
    return {
        "psi_decrease": {
            "beta": beta,
            "alpha_bar": alpha_bar,
            "violations": [
                {"k": v.k, "observed_drop": v.observed_drop, "required_drop": v.required_drop}
                for v in violations
            ],
            "ok": not violations,
        },
        "stabilization": {
            "support_stable_from": stab.support_stable_from,
            "sign_stable_from": stab.sign_stable_from,
            "min_nonzero_magnitude_after_stable": stab.min_nonzero_magnitude_after_stable,
        },
        "tail_sums": {
            "total": tail_sum(records, records[0].k),
            "last_decade_from_k": tail_start,
            "last_decade": tail_sum(records, tail_start),
        },
        "rate": {
            "from_k": rate_from,
            "tail_fraction": rate.tail_fraction,
            "points": rate.points,
            "gamma_hat": rate.gamma_hat,
            "r2": rate.r2,
        },
    }
