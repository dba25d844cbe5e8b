"""Exact discrete optimal transport and budget-constrained transport maximization.

Every LP here is solved by the dense simplex in :mod:`structdro.lp`; these
primal values are the reference against which the dual solvers are checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (DiscreteDistribution, PartitionedSpace, ProductDistribution,
                   block_distances, pairwise_metric, product_grid_indices)
from .errors import InputError, PreconditionError, SolverError
from .lp import OPTIMAL, linprog

MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Coupling ``pi[j, m]`` moving mass from ``source[j]`` to ``dest[m]``."""

    source: np.ndarray
    dest: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        src = np.atleast_2d(np.array(self.source, dtype=float))
        dst = np.atleast_2d(np.array(self.dest, dtype=float))
        pi = np.array(self.pi, dtype=float)
        if pi.shape != (src.shape[0], dst.shape[0]):
            raise InputError(f"plan shape {pi.shape} does not match {src.shape[0]}x{dst.shape[0]} atoms")
        if np.any(pi < -MARGINAL_TOL):
            raise InputError("transport plan has negative entries")
        if abs(pi.sum() - 1.0) > MARGINAL_TOL:
            raise InputError(f"transport plan has total mass {pi.sum()!r}")
        for a in (src, dst, pi):
            a.setflags(write=False)
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "dest", dst)
        object.__setattr__(self, "pi", pi)

    @property
    def source_weights(self) -> np.ndarray:
        return self.pi.sum(axis=1)

    @property
    def dest_weights(self) -> np.ndarray:
        return self.pi.sum(axis=0)

    def source_distribution(self) -> DiscreteDistribution:
        w = np.clip(self.source_weights, 0, None)
        return DiscreteDistribution(self.source, w / w.sum())

    def dest_distribution(self) -> DiscreteDistribution:
        w = np.clip(self.dest_weights, 0, None)
        return DiscreteDistribution(self.dest, w / w.sum())

    def cost(self, cost_matrix) -> float:
        return float(np.sum(self.pi * np.asarray(cost_matrix)))

    def to_dict(self) -> dict:
        return {"source": self.source.tolist(), "dest": self.dest.tolist(), "pi": self.pi.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "TransportPlan":
        try:
            return cls(doc["source"], doc["dest"], doc["pi"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"plan document needs 'source', 'dest', 'pi': {exc}") from exc


class CostFamily:
    """n transport costs c_k(zeta, xi) >= 0 with c_k(zeta, zeta) = 0.

    Each cost is a callable mapping ``(zeta (J, d), xi (M, d))`` to a (J, M)
    matrix. :meth:`blockwise` builds the default family rho_k(zeta_k, xi_k)^p.
    """

    def __init__(self, costs: Sequence[Callable]):
        if not costs:
            raise InputError("a cost family needs at least one cost")
        self.costs = tuple(costs)

    @property
    def n(self) -> int:
        return len(self.costs)

    @classmethod
    def blockwise(cls, space: PartitionedSpace, p: float) -> "CostFamily":
        def make(k):
            return lambda z, x: block_distances(z, x, space)[k] ** p
        fam = cls([make(k) for k in range(space.n)])
        fam.space, fam.p = space, p
        return fam

    def matrices(self, zeta, xi) -> np.ndarray:
        """Stacked (n, J, M) cost matrices."""
        mats = np.stack([np.asarray(c(zeta, xi), dtype=float) for c in self.costs])
        if np.any(mats < 0) or not np.all(np.isfinite(mats)):
            raise InputError("transport costs must be finite and nonnegative")
        return mats


def _transport_equalities(J: int, M: int) -> tuple:
    rows = np.zeros((J, J * M))
    for j in range(J):
        rows[j, j * M:(j + 1) * M] = 1.0
    cols = np.zeros((M, J * M))
    for m in range(M):
        cols[m, m::M] = 1.0
    return rows, cols


def _check(res, what: str):
    if res.status != OPTIMAL:
        raise SolverError(f"{what}: LP finished with status {res.status!r}")


def wasserstein_p(P: DiscreteDistribution, Q: DiscreteDistribution, space: PartitionedSpace,
                  p: float = 1.0) -> tuple:
    """Exact p-Wasserstein distance under the product metric of ``space``.

    Returns ``(distance, plan)`` where ``plan`` couples P (rows) with Q (columns).
    """
    if p < 1:
        raise InputError(f"Wasserstein exponent must be >= 1, got {p}")
    if P.dim != space.d or Q.dim != space.d:
        raise InputError("distributions do not live in the given space")
    C = pairwise_metric(P.atoms, Q.atoms, space) ** p
    J, M = C.shape
    rows, cols = _transport_equalities(J, M)
    # one column constraint is implied by the others and total mass
    res = linprog(C.ravel(), A_eq=np.vstack([rows, cols[:-1]]),
                  b_eq=np.concatenate([P.weights, Q.weights[:-1]]))
    _check(res, "wasserstein_p")
    pi = res.x.reshape(J, M)
    cost = max(float(np.sum(pi * C)), 0.0)
    return cost ** (1.0 / p), TransportPlan(P.atoms, Q.atoms, pi)


def _evaluate(h, points) -> np.ndarray:
    if callable(h):
        vals = np.asarray(h(points), dtype=float).reshape(-1)
    else:
        vals = np.asarray(h, dtype=float).reshape(-1)
    if vals.size != np.atleast_2d(points).shape[0]:
        raise InputError("objective must give one value per candidate point")
    if not np.all(np.isfinite(vals)):
        raise InputError("objective values must be finite on the candidate set")
    return vals


def atom_indices(candidates, atoms, tol: float = 1e-12) -> np.ndarray:
    """Index of each row of ``atoms`` within ``candidates`` (-1 where absent)."""
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    if cand.shape[1] != atoms.shape[1]:
        return np.full(atoms.shape[0], -1)
    gap = np.max(np.abs(atoms[:, None, :] - cand[None, :, :]), axis=2)
    idx = gap.argmin(axis=1)
    idx[gap[np.arange(atoms.shape[0]), idx] > tol] = -1
    return idx


def contains_atoms(candidates, atoms, tol: float = 1e-12) -> bool:
    """True if every row of ``atoms`` appears among ``candidates``."""
    return bool(np.all(atom_indices(candidates, atoms, tol) >= 0))


def max_expectation_multitransport(Q: DiscreteDistribution, costs: CostFamily, budgets, h,
                                   destinations) -> tuple:
    """Worst-case expectation of ``h`` over the multi-transport hyperrectangle.

    Solves  max sum_{j,m} pi_jm h(x_m)  s.t.  sum_m pi_jm = q_j  and
    sum_{j,m} c_k(zeta_j, x_m) pi_jm <= budgets[k]  for every k.
    ``budgets`` are raw transport budgets (already p-th powers for a
    Wasserstein-type cost family). ``h`` is a callable on (M, d) arrays or
    a vector of values on ``destinations``. Returns ``(value, plan)``.
    """
    dest = np.atleast_2d(np.asarray(destinations, dtype=float))
    budgets = np.asarray(budgets, dtype=float).reshape(-1)
    if budgets.size != costs.n:
        raise InputError(f"{costs.n} costs but {budgets.size} budgets")
    if np.any(budgets < 0):
        raise InputError("budgets must be nonnegative")
    if not contains_atoms(dest, Q.atoms):
        raise PreconditionError("destination set must contain every source atom")
    hv = _evaluate(h, dest)
    Cs = costs.matrices(Q.atoms, dest)
    J, M = Q.size, dest.shape[0]
    rows, _ = _transport_equalities(J, M)
    res = linprog(-np.tile(hv, J), A_ub=Cs.reshape(costs.n, J * M), b_ub=budgets,
                  A_eq=rows, b_eq=Q.weights)
    _check(res, "max_expectation_multitransport")
    pi = res.x.reshape(J, M)
    return float(np.sum(pi.sum(axis=0) * hv)), TransportPlan(Q.atoms, dest, pi / pi.sum())


@dataclass
class HyperrectSolution:
    value: float
    component_values: list
    plans: list


def max_expectation_hyperrect(Q: ProductDistribution, radii, p: float, h_list, destinations_list,
                              space: PartitionedSpace, mode: str = "sum") -> HyperrectSolution:
    """Worst-case expectation over the Wasserstein hyperrectangle.

    The objective is sum_k h_k(xi_k) (``mode="sum"``) or prod_k h_k(xi_k)
    with h_k >= 0 (``mode="product"``). Each component problem
    max E_{P_k}[h_k] s.t. W_p(Q_k, P_k) <= radii[k] is an independent LP;
    their optima are summed or multiplied.
    """
    Q.check_space(space)
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if radii.size != Q.n or len(h_list) != Q.n or len(destinations_list) != Q.n:
        raise InputError("need one radius, objective and candidate set per component")
    if mode not in ("sum", "product"):
        raise InputError(f"mode must be 'sum' or 'product', got {mode!r}")
    values, plans = [], []
    for k, comp in enumerate(Q.components):
        dest = np.atleast_2d(np.asarray(destinations_list[k], dtype=float))
        if dest.shape[1] != comp.dim:
            dest = dest.reshape(-1, comp.dim)
        hv = _evaluate(h_list[k], dest)
        if mode == "product" and np.any(hv < 0):
            raise PreconditionError(f"product mode needs h_{k} >= 0 on its candidate set")
        fam = CostFamily.blockwise(space.block(k), p)
        v, plan = max_expectation_multitransport(comp, fam, [radii[k] ** p], hv, dest)
        values.append(v)
        plans.append(plan)
    total = math.fsum(values) if mode == "sum" else math.prod(values)
    return HyperrectSolution(total, values, plans)


def glue_product_plans(plans: Sequence[TransportPlan]) -> TransportPlan:
    """Joint plan T#(pi_1 x ... x pi_n) on the product atom grids.

    Joint source/destination atoms follow the ordering of
    :func:`structdro.core.expand_product` (first component fastest).
    """
    if not plans:
        raise InputError("need at least one plan")
    src_idx = product_grid_indices([pl.source.shape[0] for pl in plans])
    dst_idx = product_grid_indices([pl.dest.shape[0] for pl in plans])
    for pl in plans:
        if pl.source.shape[1] != pl.dest.shape[1]:
            raise InputError("plan source and destination dimensions differ")
    source = np.concatenate([pl.source[src_idx[:, k]] for k, pl in enumerate(plans)], axis=1)
    dest = np.concatenate([pl.dest[dst_idx[:, k]] for k, pl in enumerate(plans)], axis=1)
    pi = np.ones((src_idx.shape[0], dst_idx.shape[0]))
    for k, pl in enumerate(plans):
        pi *= pl.pi[np.ix_(src_idx[:, k], dst_idx[:, k])]
    return TransportPlan(source, dest, pi / pi.sum())
