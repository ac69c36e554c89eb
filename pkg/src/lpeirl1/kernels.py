"""Stateless math kernels for lp-quasi-norm regularized minimization.

Everything in this module is a pure function of its arguments and safe to
call from worker processes. Vectors are plain 1-D float64 numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError, InvalidInputError

# Smoothing floor: the geometric decay eps <- mu*eps never drops below this,
# so (|x_i| + eps_i)**(p-1) stays representable even on zero coordinates.
EPS_FLOOR = 1e-150

# Weight cap. A coordinate whose weight reaches the cap is thresholded to
# zero by the prox for any reasonable lambda/beta, so capping never changes
# the computed iterate; it only keeps the weight vector finite.
W_MAX = 1e15


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array or raise."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _check_same_dim(n: int, **named) -> None:
    for name, arr in named.items():
        if arr.shape[0] != n:
            raise DimensionMismatchError(
                f"{name} has length {arr.shape[0]}, expected {n}"
            )


@dataclass(frozen=True)
class RegParams:
    """Regularizer lam * sum_i |x_i|**p with exponent p in (0, 1)."""

    p: float
    lam: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ConfigurationError(f"p must lie strictly inside (0, 1), got {self.p}")
        if not (self.lam > 0.0) or not np.isfinite(self.lam):
            raise ConfigurationError(f"lam must be positive and finite, got {self.lam}")


def compute_weights(x, eps, reg: RegParams) -> np.ndarray:
    """Linearization weights w_i = min(p * (|x_i| + eps_i)**(p-1), W_MAX).

    eps must stay at or above EPS_FLOOR so the power never overflows.
    """
    x = as_vector(x, "x")
    eps = as_vector(eps, "eps")
    _check_same_dim(x.shape[0], eps=eps)
    if np.any(eps < EPS_FLOOR):
        raise InvalidInputError(f"eps entries must be >= {EPS_FLOOR}")
    w = reg.p * np.power(np.abs(x) + eps, reg.p - 1.0)
    return np.minimum(w, W_MAX)


def extrapolate(x, x_prev, alpha: float) -> np.ndarray:
    """Momentum point y = x + alpha * (x - x_prev), alpha in [0, 1)."""
    if not (0.0 <= alpha < 1.0):
        raise ConfigurationError(f"alpha must lie in [0, 1), got {alpha}")
    x = as_vector(x, "x")
    x_prev = as_vector(x_prev, "x_prev")
    _check_same_dim(x.shape[0], x_prev=x_prev)
    return x + alpha * (x - x_prev)


def prox_weighted_l1(grad_y, y, w, beta: float, lam: float) -> np.ndarray:
    """Exact minimizer of  grad_y.x + (beta/2)||x - y||^2 + lam * sum_i w_i |x_i|.

    Separable; per coordinate it is a soft threshold of z = y - grad_y/beta at
    t = lam*w/beta:  x_i = sign(z_i) * max(|z_i| - t_i, 0).  Ties |z_i| = t_i
    resolve to exactly 0.
    """
    if not (beta > 0.0) or not np.isfinite(beta):
        raise ConfigurationError(f"beta must be positive and finite, got {beta}")
    if not (lam > 0.0) or not np.isfinite(lam):
        raise ConfigurationError(f"lam must be positive and finite, got {lam}")
    grad_y = as_vector(grad_y, "grad_y")
    y = as_vector(y, "y")
    w = as_vector(w, "w")
    _check_same_dim(grad_y.shape[0], y=y, w=w)
    if np.any(w < 0.0):
        raise InvalidInputError("weights must be nonnegative")
    z = y - grad_y / beta
    t = (lam / beta) * w
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def prox_optimality_residual(grad_y, y, w, x, beta: float, lam: float) -> float:
    """Max coordinatewise violation of the weighted-l1 prox optimality system.

    On the support the condition is grad_y + beta*(x - y) + lam*w*sign(x) = 0;
    at zero coordinates |grad_y - beta*y| must not exceed lam*w.
    """
    grad_y = as_vector(grad_y, "grad_y")
    y = as_vector(y, "y")
    w = as_vector(w, "w")
    x = as_vector(x, "x")
    _check_same_dim(grad_y.shape[0], y=y, w=w, x=x)
    g = grad_y + beta * (x - y)
    t = lam * w
    on = x != 0.0
    # zero coordinates: -g must land inside the subgradient interval [-t, t]
    res = np.where(on, np.abs(g + np.sign(x) * t), np.maximum(np.abs(g) - t, 0.0))
    return float(np.max(res)) if res.size else 0.0


def smoothed_objective(x, eps, problem) -> float:
    """F(x, eps) = f(x) + lam * sum_i (|x_i| + eps_i)**p.

    eps may be a vector, a scalar, or 0 (the unsmoothed objective).
    """
    x = as_vector(x, "x")
    eps_arr = np.asarray(eps, dtype=np.float64)
    if eps_arr.ndim == 0:
        eps_arr = np.full_like(x, float(eps_arr))
    if eps_arr.shape[0] != x.shape[0]:
        raise DimensionMismatchError(
            f"eps has length {eps_arr.shape[0]}, expected {x.shape[0]}"
        )
    if np.any(eps_arr < 0.0) or not np.all(np.isfinite(eps_arr)):
        raise InvalidInputError("eps entries must be finite and >= 0")
    reg = problem.reg
    penalty = reg.lam * float(np.sum(np.power(np.abs(x) + eps_arr, reg.p)))
    return float(problem.smooth.value(x)) + penalty


def proximal_surrogate(x, y, eps, beta: float, problem) -> float:
    """psi(x, y, eps) = F(x, eps) + (beta/2) * ||x - y||^2."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    _check_same_dim(x.shape[0], y=y)
    d = x - y
    return smoothed_objective(x, eps, problem) + 0.5 * beta * float(d @ d)


def stationarity_residual(x, problem) -> float:
    """Max over the support of |grad_i f(x) + lam*p*|x_i|**(p-1)*sign(x_i)|.

    Zero when x has empty support (x = 0 satisfies the condition vacuously).
    """
    x = as_vector(x, "x")
    on = x != 0.0
    if not np.any(on):
        return 0.0
    g = problem.smooth.gradient(x)
    reg = problem.reg
    xs = x[on]
    r = g[on] + reg.lam * reg.p * np.power(np.abs(xs), reg.p - 1.0) * np.sign(xs)
    return float(np.max(np.abs(r)))


def sign_pattern(x) -> np.ndarray:
    """Entrywise sign in {-1, 0, +1} as int8."""
    return np.sign(np.asarray(x, dtype=np.float64)).astype(np.int8)


# ---------------------------------------------------------------------------
# Exact lp proximal maps for the jumping-threshold solver (p = 1/2 and 2/3).
# Both reduce to scalar root-finding with a closed trigonometric /
# hyperbolic solution plus a dead zone below a jump threshold.
# ---------------------------------------------------------------------------


def half_threshold(z, nu: float) -> np.ndarray:
    """Elementwise argmin_x 0.5*(x - z)^2 + nu*|x|^(1/2).

    Dead zone |z| <= (3/2)*nu^(2/3); above it the nonzero stationary point of
    u^3 - |z|*u + nu/2 = 0 (u = sqrt(|x|)) in its largest root gives
    x = (2|z|/3) * (1 + cos(2*pi/3 - (2/3)*arccos((nu/4)*(|z|/3)^(-3/2)))).
    """
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("z contains non-finite entries")
    if nu < 0.0 or not np.isfinite(nu):
        raise InvalidInputError(f"nu must be >= 0, got {nu}")
    if nu == 0.0:
        return z.copy()
    a = np.abs(z)
    out = np.zeros_like(z)
    m = a > 1.5 * nu ** (2.0 / 3.0)
    if np.any(m):
        am = a[m]
        phi = np.arccos(np.clip(0.25 * nu * np.power(am / 3.0, -1.5), -1.0, 1.0))
        mag = (2.0 / 3.0) * am * (1.0 + np.cos(2.0 * np.pi / 3.0 - 2.0 * phi / 3.0))
        out[m] = np.sign(z[m]) * mag
    return out


def two_thirds_threshold(z, nu: float) -> np.ndarray:
    """Elementwise argmin_x 0.5*(x - z)^2 + nu*|x|^(2/3).

    Dead zone |z| <= 2*(2*nu/3)^(3/4). Above it, with u = |x|^(1/3), the
    quartic u^4 - |z|*u + 2*nu/3 = 0 factors through the resolvent cubic
    t^3 - (8*nu/3)*t - z^2 = 0 whose real root is hyperbolic; the larger
    quadratic root gives u and x = sign(z)*u^3.
    """
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("z contains non-finite entries")
    if nu < 0.0 or not np.isfinite(nu):
        raise InvalidInputError(f"nu must be >= 0, got {nu}")
    if nu == 0.0:
        return z.copy()
    a = np.abs(z)
    out = np.zeros_like(z)
    m = a > 2.0 * (2.0 * nu / 3.0) ** 0.75
    if np.any(m):
        am = a[m]
        arg = 27.0 * am * am / (16.0 * (2.0 * nu) ** 1.5)
        phi = np.arccosh(np.maximum(arg, 1.0))
        t = (4.0 * np.sqrt(2.0 * nu) / 3.0) * np.cosh(phi / 3.0)
        big_a = np.sqrt(t)
        disc = np.maximum(2.0 * am / big_a - t, 0.0)
        u = 0.5 * (big_a + np.sqrt(disc))
        out[m] = np.sign(z[m]) * u ** 3
    return out


def lp_prox(z, p: float, nu: float) -> np.ndarray:
    """Dispatch to the exact lp prox; only p = 1/2 and p = 2/3 have one."""
    if abs(p - 0.5) < 1e-12:
        return half_threshold(z, nu)
    if abs(p - 2.0 / 3.0) < 1e-12:
        return two_thirds_threshold(z, nu)
    raise ConfigurationError(
        f"no closed-form lp prox for p={p}; supported values are 1/2 and 2/3"
    )
