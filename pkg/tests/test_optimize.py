import numpy as np
import pytest

from structdro.errors import InputError, SolverError
from structdro.optimize import ellipsoid_box, golden_section, minimize_box


@pytest.mark.parametrize("a,b,target", [(0, 10, 2.0), (0, 1, 1.0), (3, 5, 3.0), (-4, 4, -1.25)])
def test_golden_section(a, b, target):
    x, fx = golden_section(lambda t: (t - target) ** 2 + 1, a, b, tol=1e-12)
    best = min(max(target, a), b)
    # value comparisons resolve a smooth minimum only to about sqrt(eps)
    assert x == pytest.approx(best, abs=1e-7)
    assert fx - ((best - target) ** 2 + 1) <= 1e-14


def test_golden_section_kink():
    x, fx = golden_section(lambda t: abs(t - 0.3) + 0.5 * t, 0, 1, tol=1e-13)
    assert x == pytest.approx(0.3, abs=1e-10)


def test_minimize_box_smooth_quadratic():
    c = np.array([0.3, -0.2, 0.9])
    res = minimize_box(lambda z: float(np.sum((z - c) ** 2)), [-1] * 3, [1] * 3)
    np.testing.assert_allclose(res.x, np.clip(c, -1, 1), atol=1e-6)
    assert res.converged


def test_minimize_box_rejects_nonfinite():
    with pytest.raises(SolverError):
        minimize_box(lambda z: np.nan, [0], [1])
    with pytest.raises(InputError):
        minimize_box(lambda z: 0.0, [0, 0], [1, -1])


def piecewise(z):
    # max of affine pieces, kink along a diagonal valley
    A = np.array([[1.0, 1.0], [-1.0, 2.0], [2.0, -1.0], [-1.0, -1.0]])
    b = np.array([0.0, 0.5, 0.5, 0.2])
    vals = A @ z + b
    i = int(np.argmax(vals))
    return float(vals[i]), A[i]


def test_ellipsoid_piecewise_linear():
    # reference by dense grid plus exact vertex enumeration
    res = ellipsoid_box(piecewise, [-2, -2], [2, 2], tol=1e-12)
    grid = np.linspace(-2, 2, 801)
    best = min(piecewise(np.array([u, v]))[0] for u in grid for v in grid)
    assert res.converged
    assert res.fun <= best + 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_ellipsoid_random_convex_quadratic(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    L = rng.normal(size=(n, n))
    H = L @ L.T + 0.1 * np.eye(n)
    c = rng.normal(size=n) * 2

    def f(z):
        d = z - c
        return float(d @ H @ d), 2 * H @ d
    res = ellipsoid_box(f, -np.ones(n), np.ones(n), tol=1e-12)
    # oracle: projected gradient with tiny steps is slow; use scipy bounded solver
    from scipy.optimize import minimize
    ref = minimize(lambda z: f(z)[0], np.zeros(n), jac=lambda z: f(z)[1],
                   bounds=[(-1, 1)] * n, method="L-BFGS-B", options={"ftol": 1e-15, "gtol": 1e-12})
    assert res.fun <= ref.fun + 1e-8


def test_ellipsoid_needs_two_dims():
    with pytest.raises(InputError):
        ellipsoid_box(lambda z: (0.0, np.zeros(1)), [0], [1])
