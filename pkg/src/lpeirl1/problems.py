"""Smooth data-fit terms and the composite problem container."""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EstimationError, InvalidInputError
from .kernels import RegParams, as_vector


class SmoothTerm(abc.ABC):
    """Differentiable term f with an L-Lipschitz gradient.

    Open interface: anything implementing these four methods can be solved.
    """

    @abc.abstractmethod
    def value(self, x) -> float: ...

    @abc.abstractmethod
    def gradient(self, x) -> np.ndarray: ...

    @abc.abstractmethod
    def dimension(self) -> int: ...

    @abc.abstractmethod
    def lipschitz_constant(self) -> float: ...


class LeastSquaresProblem(SmoothTerm):
    """f(x) = 0.5 * ||A x - y||^2, gradient A^T (A x - y), L = sigma_max(A)^2."""

    def __init__(self, A, y):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.size == 0:
            raise InvalidInputError(f"A must be a nonempty 2-D array, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidInputError("A contains non-finite entries")
        y = as_vector(y, "y")
        if y.shape[0] != A.shape[0]:
            raise DimensionMismatchError(
                f"y has length {y.shape[0]}, expected {A.shape[0]} rows of A"
            )
        self.A = A
        self.y = y
        self._lipschitz = None

    def value(self, x) -> float:
        r = self.A @ x - self.y
        return 0.5 * float(r @ r)

    def gradient(self, x) -> np.ndarray:
        return self.A.T @ (self.A @ x - self.y)

    def dimension(self) -> int:
        return self.A.shape[1]

    def lipschitz_constant(self) -> float:
        if self._lipschitz is None:
            self._lipschitz = estimate_lipschitz(self.A)
        return self._lipschitz


@dataclass(frozen=True)
class ProblemInstance:
    """A smooth term plus regularizer parameters: minimize f(x) + lam*sum|x_i|^p."""

    smooth: SmoothTerm
    reg: RegParams


def estimate_lipschitz(A, tol: float = 1e-10, max_iter: int = 5000, seed: int = 0) -> float:
    """Largest eigenvalue of A^T A (= sigma_max(A)^2) by power iteration.

    Deterministic: the start vector comes from a fixed-seed generator. The
    returned estimate approaches the true value from below; accuracy is
    one-sided up to the relative tolerance, not certified.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"A must be a nonempty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("A contains non-finite entries")
    rng = np.random.default_rng(seed)
    n = A.shape[1]
    v = rng.standard_normal(n)
    nv = np.linalg.norm(v)
    v /= nv
    lam = 0.0
    for _ in range(max_iter):
        u = A @ v
        su = float(np.max(np.abs(u)))
        if su == 0.0:
            # v landed in the null space; resample rather than divide by zero
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        un = u / su
        # Rayleigh quotient of A^T A at unit v; scaling by max|u| keeps the
        # dot product finite whenever the eigenvalue itself is representable
        lam_new = su * su * float(un @ un)
        if not np.isfinite(lam_new):
            raise EstimationError(
                f"leading eigenvalue of A^T A overflows ({lam_new})",
                last_estimate=lam,
                last_vector=v,
            )
        if abs(lam_new - lam) <= tol * lam_new:
            return lam_new
        lam = lam_new
        w = A.T @ u
        sw = float(np.max(np.abs(w)))
        if sw == 0.0 or not np.isfinite(sw):
            raise EstimationError(
                f"power iteration broke down (max |A^T A v| = {sw})",
                last_estimate=lam,
                last_vector=v,
            )
        wn = w / sw  # entries in [-1, 1]; its norm cannot overflow
        v = wn / np.linalg.norm(wn)
    raise EstimationError(
        f"power iteration did not settle within {max_iter} iterations "
        f"(last estimate {lam})",
        last_estimate=lam,
        last_vector=v,
    )


def grad_check(term: SmoothTerm, x, h: float = 1e-6) -> float:
    """Max coordinatewise gap between term.gradient and central differences."""
    x = as_vector(x, "x")
    if x.shape[0] != term.dimension():
        raise DimensionMismatchError(
            f"x has length {x.shape[0]}, expected {term.dimension()}"
        )
    g = term.gradient(x)
    worst = 0.0
    e = np.zeros_like(x)
    for i in range(x.shape[0]):
        e[i] = h
        fd = (term.value(x + e) - term.value(x - e)) / (2.0 * h)
        worst = max(worst, abs(fd - g[i]))
        e[i] = 0.0
    return float(worst)
