import numpy as np
import pytest

from lpeirl1 import (
    DimensionMismatchError,
    EstimationError,
    InvalidInputError,
    LeastSquaresProblem,
    estimate_lipschitz,
    grad_check,
)


def test_least_squares_value_gradient():
    A = np.array([[1.0, 2.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([1.0, -1.0, 0.5])
    f = LeastSquaresProblem(A, y)
    x = np.array([0.3, -0.7])
    r = A @ x - y
    assert f.value(x) == pytest.approx(0.5 * r @ r)
    assert np.allclose(f.gradient(x), A.T @ r)
    assert f.dimension() == 2


def test_least_squares_zero_residual():
    A = np.eye(3)
    x = np.array([1.0, 2.0, 3.0])
    f = LeastSquaresProblem(A, A @ x)
    assert f.value(x) == 0.0
    assert np.allclose(f.gradient(x), 0.0)


def test_least_squares_validation():
    with pytest.raises(DimensionMismatchError):
        LeastSquaresProblem(np.eye(3), np.zeros(2))
    with pytest.raises(InvalidInputError):
        LeastSquaresProblem(np.array([[np.inf, 0.0]]), np.zeros(1))
    with pytest.raises(InvalidInputError):
        LeastSquaresProblem(np.zeros((0, 2)), np.zeros(0))


def test_lipschitz_examples():
    assert estimate_lipschitz(np.eye(4)) == pytest.approx(1.0, abs=1e-9)
    assert estimate_lipschitz(np.diag([3.0, 1.0])) == pytest.approx(9.0, rel=1e-6)
    assert estimate_lipschitz(np.ones((2, 2))) == pytest.approx(4.0, rel=1e-9)


def test_lipschitz_matches_dense_eig():
    rng = np.random.default_rng(0)
    for _ in range(10):
        A = rng.standard_normal((8, 13))
        want = float(np.linalg.eigvalsh(A.T @ A).max())
        got = estimate_lipschitz(A)
        assert got == pytest.approx(want, rel=1e-6)
        # one-sided: never meaningfully above the true value
        assert got <= want * (1 + 1e-9)


def test_lipschitz_deterministic():
    A = np.random.default_rng(3).standard_normal((6, 9))
    assert estimate_lipschitz(A) == estimate_lipschitz(A)


def test_lipschitz_budget_exhaustion():
    # small eigengap: each sweep still moves the estimate, so an exact
    # tolerance with a tiny budget must run out rather than settle
    A = np.diag([1.0, 1.0 - 1e-4])
    with pytest.raises(EstimationError) as exc:
        estimate_lipschitz(A, tol=0.0, max_iter=3)
    assert exc.value.last_estimate is not None
    assert exc.value.last_estimate == pytest.approx(1.0, rel=1e-3)


def test_lipschitz_cached_on_problem():
    A = np.random.default_rng(1).standard_normal((5, 7))
    f = LeastSquaresProblem(A, np.zeros(5))
    assert f.lipschitz_constant() is f.lipschitz_constant()
    assert f.lipschitz_constant() == pytest.approx(estimate_lipschitz(A))


def test_grad_check_least_squares():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((7, 10))
    f = LeastSquaresProblem(A, rng.standard_normal(7))
    for _ in range(5):
        x = rng.standard_normal(10)
        g = f.gradient(x)
        assert grad_check(f, x) <= 1e-6 * (1.0 + np.abs(g).max())


def test_grad_check_flags_wrong_gradient():
    class Wrong(LeastSquaresProblem):
        def gradient(self, x):
            return super().gradient(x) + 0.01

    rng = np.random.default_rng(4)
    A = rng.standard_normal((5, 6))
    f = Wrong(A, rng.standard_normal(5))
    assert grad_check(f, rng.standard_normal(6)) > 1e-3
