"""Minimization of low-dimensional convex functions on boxes.

The objectives here (dual functions, the drone placement objective) are
convex but nonsmooth. Three tools:

* :func:`golden_section` is exact for one-dimensional convex problems.
* :func:`ellipsoid_box` uses subgradients and certifies its own accuracy;
  it is the workhorse whenever a subgradient is available.
* :func:`minimize_box` is a derivative-free fallback (golden-section line
  searches along the axes plus seeded random directions). It can stall
  on kinks of polyhedral functions and gives no accuracy certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InputError, SolverError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                   max_iter: int = 200) -> tuple:
    """Minimize a unimodal ``f`` on [a, b]; returns ``(x, f(x))``.

    The endpoints are evaluated too, so boundary minima are found exactly.
    """
    if b < a:
        a, b = b, a
    fa, fb = f(a), f(b)
    best_x, best_f = (a, fa) if fa <= fb else (b, fb)
    if b - a <= tol:
        return best_x, best_f
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    for x, fx in ((x1, f1), (x2, f2)):
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    cycles: int
    evaluations: int
    converged: bool
    history: list = field(default_factory=list)


def _segment(x: np.ndarray, d: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> tuple:
    """Range of s such that x + s d stays inside [lower, upper]."""
    lo, hi = -np.inf, np.inf
    for xi, di, l, u in zip(x, d, lower, upper):
        if di > 0:
            lo, hi = max(lo, (l - xi) / di), min(hi, (u - xi) / di)
        elif di < 0:
            lo, hi = max(lo, (u - xi) / di), min(hi, (l - xi) / di)
    return max(lo, -1e300), min(hi, 1e300)


def minimize_box(f: Callable[[np.ndarray], float], lower: Sequence[float], upper: Sequence[float],
                 starts: Optional[Sequence[Sequence[float]]] = None, tol: float = 1e-12,
                 line_tol: float = 1e-11, max_cycles: int = 500, random_dirs: Optional[int] = None,
                 patience: int = 3, seed: int = 0) -> MinimizeResult:
    """Minimize a convex ``f`` over the box [lower, upper] (bounds must be finite).

    Runs from every point in ``starts`` and keeps the best. A run stops once
    ``patience`` consecutive cycles improve the value by less than
    ``tol * (1 + |f|)``. ``line_tol`` is relative to each box side.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    dim = lower.size
    if upper.size != dim or np.any(upper < lower):
        raise InputError("invalid box bounds")
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise InputError("box bounds must be finite")
    if starts is None:
        starts = [(lower + upper) / 2.0]
    if random_dirs is None:
        random_dirs = dim if dim > 1 else 0
    span = np.maximum(upper - lower, 1e-300)
    rng = np.random.Generator(np.random.Philox(seed))
    evals = 0

    def F(z):
        nonlocal evals
        evals += 1
        v = float(f(z))
        if not math.isfinite(v):
            raise SolverError(f"objective returned non-finite value {v!r} at {z.tolist()}")
        return v

    def line_search(x, fx, d):
        s_lo, s_hi = _segment(x, d, lower, upper)
        if s_hi - s_lo <= 0:
            return x, fx
        # step tolerance: line_tol times the box side, in every coordinate
        s_tol = line_tol / np.max(np.abs(d) / span)
        s, fs = golden_section(lambda s: F(np.clip(x + s * d, lower, upper)), s_lo, s_hi, tol=s_tol)
        if fs < fx:
            return np.clip(x + s * d, lower, upper), fs
        return x, fx

    best = None
    for start in starts:
        x = np.clip(np.asarray(start, dtype=float), lower, upper)
        fx = F(x)
        history = [fx]
        quiet, converged, cycles = 0, False, 0
        for cycles in range(1, max_cycles + 1):
            f_start = fx
            for i in range(dim):
                d = np.zeros(dim)
                d[i] = span[i]
                x, fx = line_search(x, fx, d)
            for _ in range(random_dirs):
                d = rng.standard_normal(dim) * span
                x, fx = line_search(x, fx, d)
            history.append(fx)
            if f_start - fx <= tol * (1.0 + abs(fx)):
                quiet += 1
                if quiet >= patience:
                    converged = True
                    break
            else:
                quiet = 0
        if best is None or fx < best.fun:
            best = MinimizeResult(x, fx, cycles, 0, converged, history)
    best.evaluations = evals
    return best


def ellipsoid_box(f: Callable[[np.ndarray], tuple], lower: Sequence[float], upper: Sequence[float],
                  tol: float = 1e-11, max_iter: int = 20_000) -> MinimizeResult:
    """Ellipsoid method for a convex ``f`` over a box, using subgradients.

    ``f(x)`` returns ``(value, subgradient)``. The ellipsoid
    {x : |B^-1 (x - c)| <= 1} starts as the axis-aligned one circumscribing
    the box and is kept in factored form so it never loses definiteness.
    Axes that grow past the box diameter R are shrunk: for y in the box,
    clipping the long semi-axes to R (plus the distance
    from the center to the box) and scaling all by sqrt(2) still
    covers y. Stops when the certified gap sqrt(g' B B' g) at a feasible
    center drops below ``tol * (1 + |best|)``. Needs dimension >= 2.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    if n < 2:
        raise InputError("ellipsoid_box needs at least two variables")
    if np.any(upper < lower) or not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise InputError("invalid box bounds")
    half = np.maximum((upper - lower) / 2.0, 1e-300)
    R = 2.0 * float(np.linalg.norm(half))
    x = (lower + upper) / 2.0
    B = np.diag(math.sqrt(n) * half)
    scale = n / math.sqrt(n * n - 1.0)
    shrink = 1.0 - math.sqrt((n - 1.0) / (n + 1.0))
    best_x, best_f = None, np.inf
    evals, converged, it = 0, False, 0
    history = []
    for it in range(1, max_iter + 1):
        below, above = x < lower, x > upper
        if np.any(below) or np.any(above):
            g = np.zeros(n)
            i = int(np.flatnonzero(below | above)[0])
            g[i] = -1.0 if below[i] else 1.0
        else:
            fx, g = f(x)
            evals += 1
            g = np.asarray(g, dtype=float)
            if not math.isfinite(fx) or not np.all(np.isfinite(g)):
                raise SolverError(f"objective returned non-finite output at {x.tolist()}")
            if fx < best_f:
                best_x, best_f = x.copy(), float(fx)
                history.append(best_f)
            width = float(np.linalg.norm(B.T @ g))
            if width <= tol * (1.0 + abs(best_f)):
                converged = True
                break
        Bg = B.T @ g
        width = float(np.linalg.norm(Bg))
        if width == 0.0:
            break
        gt = Bg / width
        Bgt = B @ gt
        x = x - Bgt / (n + 1)
        B = scale * (B - shrink * np.outer(Bgt, gt))
        U, S, _ = np.linalg.svd(B)
        reach = R + float(np.linalg.norm(x - np.clip(x, lower, upper)))
        if S[0] > 4.0 * reach:
            B = math.sqrt(2.0) * U * np.minimum(S, reach)
    if best_x is None:
        best_x = np.clip(x, lower, upper)
        best_f, _ = f(best_x)
        evals += 1
    return MinimizeResult(best_x, float(best_f), it, evals, converged, history)
