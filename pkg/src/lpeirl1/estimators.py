"""Scikit-learn style estimator facade over the functional solvers."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import ConfigurationError
from .kernels import RegParams
from .problems import LeastSquaresProblem, ProblemInstance
from .solvers import SOLVERS, AlphaSchedule, SolverConfig

# beta must strictly exceed the gradient Lipschitz constant for the descent
# theory; when beta is left unset we inflate the estimate by this margin.
_BETA_MARGIN = 1e-6


class LpRegression(RegressorMixin, BaseEstimator):
    """Sparse linear regression with an lp quasi-norm penalty, 0 < p < 1.

    Minimizes 0.5 * ||X w - y||^2 + lam * sum_i |w_i|^p over w.

    Parameters
    ----------
    p : exponent of the penalty, in (0, 1). solver='ijt' needs 1/2 or 2/3.
    lam : penalty strength, > 0.
    solver : 'eirl1', 'irl1', 'irl2', or 'ijt'.
    alpha : extrapolation; a real in [0, 1) or 'nesterov'. Ignored by
        'irl1' (always 0) and 'ijt' (no extrapolation).
    beta : proximal weight; None estimates the gradient Lipschitz constant
        of the data term and adds a tiny safety margin.
    mu : smoothing decay factor in (0, 1).
    eps0 : initial smoothing level, > 0.
    opttol : relative step-norm stopping tolerance.
    max_iter : iteration cap.
    x0 : 'zeros', 'normal' (seeded by random_state), or an explicit vector.
    random_state : seed for x0='normal'.
    trace_level : 'none', 'summary', or 'full'; traces land on result_.

    Attributes
    ----------
    coef_ : fitted coefficient vector.
    intercept_ : always 0.0 (the model has no intercept term).
    n_iter_ : iterations performed.
    converged_ : whether the step-norm tolerance was met.
    result_ : the underlying SolveResult (trace included).
    """

    def __init__(
        self,
        p=0.5,
        lam=0.05,
        solver="eirl1",
        alpha=0.9,
        beta=None,
        mu=0.9,
        eps0=1.0,
        opttol=1e-6,
        max_iter=5000,
        x0="zeros",
        random_state=None,
        trace_level="none",
    ):
        self.p = p
        self.lam = lam
        self.solver = solver
        self.alpha = alpha
        self.beta = beta
        self.mu = mu
        self.eps0 = eps0
        self.opttol = opttol
        self.max_iter = max_iter
        self.x0 = x0
        self.random_state = random_state
        self.trace_level = trace_level

    def _schedule(self) -> AlphaSchedule:
        if isinstance(self.alpha, str):
            return AlphaSchedule.parse(self.alpha)
        if isinstance(self.alpha, numbers.Real):
            return AlphaSchedule.constant(float(self.alpha))
        raise ConfigurationError(f"alpha must be a real or 'nesterov', got {self.alpha!r}")

    def _starting_point(self, n: int) -> np.ndarray:
        if isinstance(self.x0, str):
            if self.x0 == "zeros":
                return np.zeros(n)
            if self.x0 == "normal":
                return np.random.default_rng(self.random_state).standard_normal(n)
            raise ConfigurationError(
                f"x0 must be 'zeros', 'normal', or a vector, got {self.x0!r}"
            )
        x0 = np.asarray(self.x0, dtype=np.float64)
        if x0.shape != (n,):
            raise ConfigurationError(f"explicit x0 must have shape ({n},), got {x0.shape}")
        return x0

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.solver not in SOLVERS:
            raise ConfigurationError(
                f"unknown solver {self.solver!r}; choices are {sorted(SOLVERS)}"
            )
        term = LeastSquaresProblem(X, y)
        problem = ProblemInstance(term, RegParams(p=float(self.p), lam=float(self.lam)))
        beta = self.beta
        if beta is None:
            beta = term.lipschitz_constant() * (1.0 + _BETA_MARGIN)
        config = SolverConfig(
            beta=float(beta),
            mu=float(self.mu),
            eps0=float(self.eps0),
            alpha_schedule=self._schedule(),
            opttol=float(self.opttol),
            max_iter=int(self.max_iter),
            trace_level=self.trace_level,
        )
        result = SOLVERS[self.solver](problem, self._starting_point(X.shape[1]), config)
        self.coef_ = result.x_final
        self.intercept_ = 0.0
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.result_ = result
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_
