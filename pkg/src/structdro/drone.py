"""Robust placement of a recharging station for two drones.

Each drone sits at a random position in the plane and can recharge only in
the nonnegative quadrant Theta. The loss of a station x is
1{xi_1, xi_2 in Theta} (|x - xi_1|^2 + |x - xi_2|^2), and we minimize its
worst-case expectation over either a multi-transport hyperrectangle built
on the product empirical distribution (one budget per drone) or a
Wasserstein ball around the joint empirical distribution.

Both duals reduce to convex functions of (x, lambda). For a sample block
zeta and multiplier lambda > 1,

    sup_{xi >= 0} |x - xi|^2 - lambda |xi - zeta|^2
        = |x|^2 - lambda |zeta|^2 + sum_j max(r_j, 0)^2 / (4 (lambda - 1)),

with r = 2 (lambda zeta - x). This is phi below.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import PartitionedSpace, SampleSet
from .errors import DomainError, InputError
from .optimize import ellipsoid_box

LAMBDA_FLOOR = 1.0 + 1e-6
SOLVER_TOL = 1e-11


def _box(value, name: str) -> tuple:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2, 2):
        raise InputError(f"{name} must be [[lo1, lo2], [hi1, hi2]], got {value!r}")
    if not np.all(np.isfinite(arr)) or np.any(arr[0] >= arr[1]):
        raise InputError(f"{name} must be a nondegenerate box, got {arr.tolist()}")
    return (float(arr[0, 0]), float(arr[0, 1])), (float(arr[1, 0]), float(arr[1, 1]))


@dataclass(frozen=True)
class DroneConfig:
    """Boxes are given as ((lo1, lo2), (hi1, hi2))."""

    theta1: tuple = ((0.0, 0.0), (2.0, 2.0))
    theta2: tuple = ((-20.0, -22.0), (0.0, 0.0))
    w: float = 0.1
    box: tuple = ((0.0, 0.0), (5.0, 5.0))
    budgets: tuple = (0.01, 0.01)
    N: int = 50
    trials: int = 30
    seed: int = 0
    within: float = 0.3
    hist_edges: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0)

    def __post_init__(self):
        for name in ("theta1", "theta2", "box"):
            object.__setattr__(self, name, _box(getattr(self, name), name))
        if not 0.0 < self.w < 1.0:
            raise InputError(f"mixture weight w must lie in (0, 1), got {self.w}")
        b = tuple(float(v) for v in self.budgets)
        if len(b) != 2 or any(not (v > 0 and math.isfinite(v)) for v in b):
            raise InputError(f"budgets must be two positive numbers, got {self.budgets!r}")
        object.__setattr__(self, "budgets", b)
        if int(self.N) != self.N or self.N < 1:
            raise InputError(f"N must be a positive integer, got {self.N}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InputError(f"trials must be a positive integer, got {self.trials}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InputError(f"seed must be a nonnegative integer, got {self.seed}")
        edges = tuple(float(e) for e in self.hist_edges)
        if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
            raise InputError("hist_edges must be strictly increasing")
        object.__setattr__(self, "hist_edges", edges)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def ball_radius(self) -> float:
        return math.hypot(*self.budgets)

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("theta1", "theta2", "box"):
            d[name] = [list(v) for v in d[name]]
        d["budgets"] = list(d["budgets"])
        d["hist_edges"] = list(d["hist_edges"])
        return d


def sample_positions(cfg: DroneConfig, trial_seed: int) -> SampleSet:
    """N joint positions (drone 1, drone 2) in R^4, partitioned as (2, 2).

    Each drone is drawn independently from w U(theta1) + (1 - w) U(theta2).
    """
    rng = np.random.Generator(np.random.Philox(trial_seed))
    pick = rng.random((cfg.N, 2)) < cfg.w
    u = rng.random((cfg.N, 2, 2))
    lo1, hi1 = np.array(cfg.theta1[0]), np.array(cfg.theta1[1])
    lo2, hi2 = np.array(cfg.theta2[0]), np.array(cfg.theta2[1])
    lo = np.where(pick[..., None], lo1, lo2)
    hi = np.where(pick[..., None], hi1, hi2)
    pts = lo + u * (hi - lo)
    return SampleSet(pts.reshape(cfg.N, 4), PartitionedSpace((2, 2), q=2.0))


def _blocks(samples) -> tuple:
    pts = samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)
    pts = np.atleast_2d(pts)
    if pts.shape[1] != 4:
        raise InputError(f"drone samples must be (N, 4), got {pts.shape}")
    return pts[:, :2], pts[:, 2:]


def phi(x, lam: float, zeta) -> tuple:
    """phi(x, lam) for every row of ``zeta`` (N, 2); also its x- and lam-derivatives."""
    if not lam > 1.0:
        raise DomainError(f"multiplier must exceed 1, got {lam}")
    x = np.asarray(x, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    r = np.maximum(2.0 * (lam * zeta - x), 0.0)
    den = lam - 1.0
    zz = np.sum(zeta * zeta, axis=1)
    val = x @ x - lam * zz + np.sum(r * r, axis=1) / (4.0 * den)
    dx = 2.0 * x - r / den
    dlam = -zz + np.sum(r * zeta, axis=1) / den - np.sum(r * r, axis=1) / (4.0 * den * den)
    return val, dx, dlam


def eliminate_nu(r) -> float:
    """min over nu >= 0 of |r + nu|^2, which is sum_j max(r_j, 0)^2."""
    r = np.asarray(r, dtype=float)
    return float(np.sum(np.maximum(r, 0.0) ** 2))


def all_pairs(N: int) -> tuple:
    i1, i2 = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    return i1.ravel(), i2.ravel()


def _pair_objective(x, lam, z1, z2, i1, i2, N_pairs: int, budget_sq, grad: bool):
    lam = np.asarray(lam, dtype=float).reshape(-1)
    v1, dx1, dl1 = phi(x, lam[0], z1)
    v2, dx2, dl2 = phi(x, lam[-1], z2)
    s = v1[i1] + v2[i2]
    act = s > 0.0
    value = math.fsum(lam * budget_sq) + math.fsum(s[act]) / N_pairs
    if not grad:
        return value
    c1 = np.bincount(i1[act], minlength=z1.shape[0]).astype(float)
    c2 = np.bincount(i2[act], minlength=z2.shape[0]).astype(float)
    gx = (c1 @ dx1 + c2 @ dx2) / N_pairs
    gl = np.array([c1 @ dl1, c2 @ dl2]) / N_pairs
    if lam.size == 1:
        gl = np.array([gl.sum()])
    return value, np.concatenate([gx, gl + budget_sq])


def hyperrect_objective(x, lam, samples, budgets, keep: Optional[np.ndarray] = None,
                        grad: bool = False):
    """<lam, eps^2> + N^-2 sum over sample pairs of max(0, phi_1 + phi_2).

    ``keep`` is an optional boolean mask over the N^2 pairs (first index
    slowest); dropped pairs must be ones that :func:`prune` marks redundant.
    """
    z1, z2 = _blocks(samples)
    N = z1.shape[0]
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != 2:
        raise InputError("the hyperrectangle objective takes two multipliers")
    i1, i2 = all_pairs(N)
    if keep is not None:
        i1, i2 = i1[keep], i2[keep]
    eps2 = np.asarray(budgets, dtype=float) ** 2
    return _pair_objective(x, lam, z1, z2, i1, i2, N * N, eps2, grad)


def ball_objective(x, lam, samples, radius: float, grad: bool = False):
    """lam eps^2 + N^-1 sum_i max(0, phi_1^i + phi_2^i) with one multiplier."""
    z1, z2 = _blocks(samples)
    N = z1.shape[0]
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != 1:
        raise InputError("the ball objective takes one multiplier")
    idx = np.arange(N)
    return _pair_objective(x, lam, z1, z2, idx, idx, N, np.array([radius ** 2]), grad)


def prune(samples, box) -> np.ndarray:
    """Keep-mask over sample pairs (first index slowest).

    A pair is redundant when both blocks are <= 0 componentwise and
    |(zeta_1, zeta_2)| >= max over the box of |(x, x)|: then
    phi_1 + phi_2 <= 2|x|^2 - |zeta|^2 <= 0 for every x in the box and every
    lam > 1. The argument needs x >= 0, so boxes reaching below zero keep
    every pair.
    """
    z1, z2 = _blocks(samples)
    lo, hi = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
    N = z1.shape[0]
    if np.any(lo < 0):
        return np.ones(N * N, dtype=bool)
    bound = 2.0 * float(np.sum(hi * hi))
    i1, i2 = all_pairs(N)
    nonpos = np.all(z1 <= 0, axis=1)[i1] & np.all(z2 <= 0, axis=1)[i2]
    far = (np.sum(z1 * z1, axis=1)[i1] + np.sum(z2 * z2, axis=1)[i2]) >= bound
    return ~(nonpos & far)


@dataclass
class PlacementSolution:
    x: np.ndarray
    lam: np.ndarray
    value: float
    iterations: int
    evaluations: int
    pruned: int
    converged: bool
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "lambda": self.lam.tolist(), "value": self.value,
                "iterations": self.iterations, "evaluations": self.evaluations,
                "pruned": self.pruned, "converged": self.converged,
                "diagnostic": self.diagnostic}


def _solve(f, n_lam: int, box, budget_sq: np.ndarray, pruned: int, tol: float,
           max_iter: int) -> PlacementSolution:
    lo, hi = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
    x0 = (lo + hi) / 2.0
    # every summand is >= 0, so lam_k eps_k^2 <= optimum <= f(x0, 2)
    f0 = f(np.concatenate([x0, np.full(n_lam, 2.0)]))[0]
    caps = np.maximum(1.01 * f0 / budget_sq, 2.0)
    lower = np.concatenate([lo, np.full(n_lam, LAMBDA_FLOOR)])
    upper = np.concatenate([hi, caps])
    res = ellipsoid_box(f, lower, upper, tol=tol, max_iter=max_iter)
    diag = "" if res.converged else f"no certificate after {res.cycles} iterations"
    return PlacementSolution(res.x[:2].copy(), res.x[2:].copy(), res.fun, res.cycles,
                             res.evaluations, pruned, res.converged, diag)


def solve_hyperrect(samples, budgets, box, use_pruning: bool = True, tol: float = SOLVER_TOL,
                    max_iter: int = 20_000) -> PlacementSolution:
    """Minimize the hyperrectangle objective over x in ``box`` and lam > 1."""
    z1, _ = _blocks(samples)
    keep = prune(samples, box) if use_pruning else None
    pruned = 0 if keep is None else int(np.count_nonzero(~keep))
    budgets = np.asarray(budgets, dtype=float)

    def f(z):
        return hyperrect_objective(z[:2], z[2:], samples, budgets, keep, grad=True)
    return _solve(f, 2, box, budgets ** 2, pruned, tol, max_iter)


def solve_ball(samples, radius: float, box, tol: float = SOLVER_TOL,
               max_iter: int = 20_000) -> PlacementSolution:
    """Minimize the ball objective over x in ``box`` and a single lam > 1."""
    if not radius > 0:
        raise InputError(f"ball radius must be positive, got {radius}")

    def f(z):
        return ball_objective(z[:2], z[2:], samples, radius, grad=True)
    return _solve(f, 1, box, np.array([radius ** 2]), 0, tol, max_iter)


def true_optimum(cfg: DroneConfig) -> tuple:
    """Optimal station and value under the true distribution.

    The loss is nonzero only when both drones fall in the nonnegative
    quadrant. With theta1 inside it and theta2 meeting it in a null set,
    that happens with probability w^2, and conditionally both drones are
    uniform on theta1. The optimum is the centre of theta1 (clipped to the
    box when it lies outside) and the value w^2 times the expected loss.
    """
    lo1, hi1 = np.array(cfg.theta1[0]), np.array(cfg.theta1[1])
    lo2, hi2 = np.array(cfg.theta2[0]), np.array(cfg.theta2[1])
    if np.any(lo1 < 0) or np.any(hi2 > 0):
        raise InputError("true_optimum assumes theta1 >= 0 and theta2 <= 0")
    center = (lo1 + hi1) / 2.0
    x = np.clip(center, cfg.box[0], cfg.box[1])
    var = float(np.sum((hi1 - lo1) ** 2) / 12.0)
    value = cfg.w ** 2 * 2.0 * (var + float(np.sum((x - center) ** 2)))
    return x, value


CSV_COLUMNS = ["trial", "method", "x1", "x2", "lambda1", "lambda2", "value", "dist_to_opt",
               "within_0_3"]


@dataclass
class ExperimentReport:
    config: dict
    x_true: list
    true_value: float
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in CSV_COLUMNS})
        return buf.getvalue()


def _summarize(rows: list, method: str, edges: tuple, within: float) -> dict:
    dist = np.array([r["dist_to_opt"] for r in rows if r["method"] == method])
    if dist.size == 0:
        return {"count": 0}
    counts, _ = np.histogram(dist, bins=np.array(edges))
    return {
        "count": int(dist.size),
        "within_fraction": float(np.mean(dist <= within)),
        "median_dist": float(np.median(dist)),
        "mean_dist": float(np.mean(dist)),
        "max_dist": float(np.max(dist)),
        "hist_counts": counts.tolist(),
        "hist_overflow": int(np.sum(dist >= edges[-1])),
    }


def run_experiment(cfg: DroneConfig) -> ExperimentReport:
    """Solve both problems on ``cfg.trials`` sample sets (trial k uses seed + k)."""
    x_true, v_true = true_optimum(cfg)
    report = ExperimentReport(cfg.to_dict(), x_true.tolist(), v_true)
    for k in range(cfg.trials):
        samples = sample_positions(cfg, cfg.seed + k)
        for method in ("hyperrect", "ball"):
            try:
                if method == "hyperrect":
                    sol = solve_hyperrect(samples, cfg.budgets, cfg.box)
                    lam = sol.lam.tolist()
                else:
                    sol = solve_ball(samples, cfg.ball_radius, cfg.box)
                    lam = [float(sol.lam[0])] * 2
            except Exception as exc:  # recorded per trial, the run continues
                report.failures.append({"trial": k, "method": method,
                                        "error": f"{type(exc).__name__}: {exc}"})
                continue
            dist = float(np.linalg.norm(sol.x - x_true))
            report.rows.append({
                "trial": k, "method": method, "x1": float(sol.x[0]), "x2": float(sol.x[1]),
                "lambda1": lam[0], "lambda2": lam[1], "value": sol.value,
                "dist_to_opt": dist, "within_0_3": int(dist <= cfg.within),
                "converged": sol.converged, "pruned": sol.pruned,
            })
    report.summary = {m: _summarize(report.rows, m, cfg.hist_edges, cfg.within)
                      for m in ("hyperrect", "ball")}
    return report
