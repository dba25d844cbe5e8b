"""Dual-side evaluation and minimization for the three ambiguity-set families.

Inner suprema are taken by enumeration over caller-supplied finite candidate
sets, so every dual value here is exact for that candidate set and can be
compared with the primal transport LPs of :mod:`structdro.transport`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (DiscreteDistribution, PartitionedSpace, ProductDistribution,
                   block_distances, expand_product)
from .errors import InputError, PreconditionError, SolverError
from .optimize import ellipsoid_box, golden_section, minimize_box
from .transport import (CostFamily, TransportPlan, _evaluate, atom_indices, contains_atoms,
                        glue_product_plans, max_expectation_multitransport)

DEFAULT_LAMBDA_CAP = 1e3


@dataclass
class ObjectiveSpec:
    """Objective h and the finite candidate sets used for inner suprema.

    ``mode`` is ``"sum"`` or ``"product"`` (``h`` is a list of per-component
    evaluators h_k and ``candidates`` a list of per-component point sets) or
    ``"general"`` (``h`` is one joint evaluator, ``candidates`` one point set).
    Evaluators may be callables on (M, d) arrays or precomputed value vectors.
    """

    mode: str
    h: object
    candidates: object

    def __post_init__(self):
        if self.mode not in ("sum", "product", "general"):
            raise InputError(f"unknown objective mode {self.mode!r}")
        if self.mode == "general":
            self.candidates = np.atleast_2d(np.asarray(self.candidates, dtype=float))
            if self.candidates.shape[0] == 0:
                raise InputError("empty candidate set")
        else:
            if len(self.h) != len(self.candidates):
                raise InputError("need one candidate set per component objective")
            self.candidates = [np.asarray(c, dtype=float) for c in self.candidates]
            if any(c.size == 0 for c in self.candidates):
                raise InputError("empty candidate set")

    def values(self, k: Optional[int] = None) -> np.ndarray:
        if self.mode == "general":
            return _evaluate(self.h, self.candidates)
        return _evaluate(self.h[k], self.candidates[k].reshape(self.candidates[k].shape[0], -1))


@dataclass
class DualSolution:
    lam: np.ndarray
    value: float
    inner_records: list = field(default_factory=list)
    cap_binding: bool = False
    evaluations: int = 0
    converged: bool = True

    def to_dict(self) -> dict:
        return {"lambda": self.lam.tolist(), "value": self.value,
                "cap_binding": self.cap_binding, "converged": self.converged,
                "evaluations": self.evaluations, "inner_records": self.inner_records}


def _component_terms(center: ProductDistribution, radii, p, spec: ObjectiveSpec,
                     lam, space: PartitionedSpace, records: Optional[list] = None) -> list:
    terms = []
    for k, comp in enumerate(center.components):
        cand = spec.candidates[k].reshape(-1, comp.dim)
        hv = spec.values(k)
        if spec.mode == "product" and np.any(hv < 0):
            raise PreconditionError(f"product mode needs h_{k} >= 0 on its candidates")
        sub = space.block(k)
        cost = block_distances(comp.atoms, cand, sub)[0] ** p
        inner = hv[None, :] + lam[k] * (radii[k] ** p - cost)
        best = np.argmax(inner, axis=1)
        sups = inner[np.arange(comp.size), best]
        terms.append(float(comp.weights @ sups))
        if records is not None:
            records.append({"component": k,
                            "argmax": [cand[m].tolist() for m in best],
                            "sup": sups.tolist()})
    return terms


def dual_value_hyperrect(center: ProductDistribution, radii, p: float, spec: ObjectiveSpec, lam,
                         space: PartitionedSpace, records: Optional[list] = None) -> float:
    """Dual objective over the Wasserstein hyperrectangle at multipliers ``lam``.

    Sum (or product) over k of
    sum_i w_ki sup_xi { h_k(xi) + lam_k (eps_k^p - rho_k(zeta_ki, xi)^p) }.
    """
    if spec.mode not in ("sum", "product"):
        raise InputError("hyperrectangle duals need a sum or product objective")
    center.check_space(space)
    radii = np.asarray(radii, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if radii.size != center.n or lam.size != center.n or len(spec.candidates) != center.n:
        raise InputError("need one radius, multiplier and candidate set per component")
    if np.any(lam < 0):
        raise InputError("multipliers must be nonnegative")
    for k, comp in enumerate(center.components):
        if not contains_atoms(spec.candidates[k].reshape(-1, comp.dim), comp.atoms):
            raise PreconditionError(f"candidate set {k} must contain the center atoms")
    terms = _component_terms(center, radii, p, spec, lam, space, records)
    return math.fsum(terms) if spec.mode == "sum" else math.prod(terms)


def dual_value_multitransport(center: DiscreteDistribution, budgets, spec: ObjectiveSpec, lam,
                              costs: CostFamily, records: Optional[list] = None,
                              with_subgradient: bool = False):
    """<lam, budgets> + sum_j w_j sup_xi { h(xi) - sum_k lam_k c_k(zeta_j, xi) }.

    ``budgets`` are raw transport budgets (eps_k^p for the Wasserstein-type
    family); the center may carry non-uniform weights. With
    ``with_subgradient`` returns ``(value, g)`` where
    g_k = budget_k - sum_j w_j c_k(zeta_j, xi*_j) at the maximizers xi*_j.
    """
    if spec.mode != "general":
        raise InputError("multi-transport duals take a joint ('general') objective")
    budgets = np.asarray(budgets, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if budgets.size != costs.n or lam.size != costs.n:
        raise InputError("need one budget and one multiplier per cost")
    if np.any(lam < 0):
        raise InputError("multipliers must be nonnegative")
    cand = spec.candidates
    if not contains_atoms(cand, center.atoms):
        raise PreconditionError("candidate set must contain the center atoms")
    hv = spec.values()
    Cs = costs.matrices(center.atoms, cand)
    inner = hv[None, :] - np.tensordot(lam, Cs, axes=1)
    best = np.argmax(inner, axis=1)
    sups = inner[np.arange(center.size), best]
    if records is not None:
        records.append({"argmax": [cand[m].tolist() for m in best], "sup": sups.tolist()})
    value = math.fsum(lam * budgets) + float(center.weights @ sups)
    if with_subgradient:
        used = Cs[:, np.arange(center.size), best] @ center.weights
        return value, budgets - used
    return value


def minimize_dual(evaluator: Callable[[np.ndarray], float], n: int, lower_bounds=None,
                  upper_cap=None, subgradient: Optional[Callable] = None, seed: int = 0,
                  tol: float = 1e-12) -> DualSolution:
    """Minimize a convex function of the multipliers over a box.

    One multiplier: exact golden-section search. Several multipliers with a
    ``subgradient`` oracle (``lam -> (value, g)``): ellipsoid method, which
    certifies its accuracy. Otherwise a derivative-free coordinate and
    random-direction search multistarted from the lower bound, 1.1 x the
    lower bound and the box midpoint. ``upper_cap`` defaults to 1e3 per
    coordinate; the solution is flagged when it ends on the cap.
    """
    lower = np.zeros(n) if lower_bounds is None else np.asarray(lower_bounds, dtype=float).reshape(-1)
    upper = np.full(n, DEFAULT_LAMBDA_CAP) if upper_cap is None else \
        np.broadcast_to(np.asarray(upper_cap, dtype=float), (n,)).copy()
    if lower.size != n or np.any(lower < 0) or np.any(upper < lower):
        raise InputError("invalid multiplier bounds")
    if n == 1:
        evals = [0]

        def f1(t):
            evals[0] += 1
            v = float(evaluator(np.array([t])))
            if not math.isfinite(v):
                raise SolverError(f"dual evaluator returned {v!r} at lambda={t}")
            return v
        t, v = golden_section(f1, float(lower[0]), float(upper[0]), tol=1e-12 * max(1.0, upper[0]))
        lam = np.array([t])
        binding = bool(upper[0] - t <= 1e-6 * max(1.0, upper[0])) and upper[0] > lower[0]
        return DualSolution(lam, v, [], binding, evals[0], True)
    if subgradient is not None:
        res = ellipsoid_box(subgradient, lower, upper, tol=tol)
        binding = bool(np.any((upper - res.x) <= 1e-6 * np.maximum(1.0, upper)))
        return DualSolution(res.x, res.fun, [], binding, res.evaluations, res.converged)
    starts = [lower, 1.1 * lower, (lower + upper) / 2.0]
    uniq = []
    for s in starts:
        if not any(np.array_equal(s, u) for u in uniq):
            uniq.append(s)
    res = minimize_box(evaluator, lower, upper, starts=uniq, tol=tol, seed=seed)
    binding = bool(np.any((upper - res.x) <= 1e-6 * np.maximum(1.0, upper)))
    return DualSolution(res.x, res.fun, [], binding, res.evaluations, res.converged)


def hyperrect_lambda_caps(center: ProductDistribution, radii, p: float, spec: ObjectiveSpec) -> np.ndarray:
    """Per-component upper bounds on optimal multipliers.

    Taking xi = zeta in the inner sup gives J_k(lam) >= lam eps^p + E[h_k],
    while J_k(0) = max h_k, so an optimal lam_k never exceeds
    (max h_k - E[h_k]) / eps_k^p. Zero radii fall back to the default cap.
    """
    caps = []
    for k, comp in enumerate(center.components):
        hv = spec.values(k)
        cand = spec.candidates[k].reshape(-1, comp.dim)
        budget = float(radii[k]) ** p
        eh = comp.expectation(hv[atom_indices(cand, comp.atoms)])
        gap = max(float(hv.max()) - eh, 0.0)
        caps.append(DEFAULT_LAMBDA_CAP if budget <= 0 else (gap / budget) * 1.01 + 1e-9)
    return np.array(caps)


def multitransport_lambda_caps(center: DiscreteDistribution, budgets, spec: ObjectiveSpec) -> np.ndarray:
    """Upper bounds (max h - E_center[h]) / budget_k on optimal multipliers."""
    hv = spec.values()
    eh = center.expectation(hv[atom_indices(spec.candidates, center.atoms)])
    gap = max(float(hv.max()) - eh, 0.0)
    budgets = np.asarray(budgets, dtype=float).reshape(-1)
    return np.array([DEFAULT_LAMBDA_CAP if b <= 0 else (gap / b) * 1.01 + 1e-9 for b in budgets])


def solve_dual_hyperrect(center: ProductDistribution, radii, p: float, spec: ObjectiveSpec,
                         space: PartitionedSpace, seed: int = 0) -> DualSolution:
    """Minimize the hyperrectangle dual.

    The dual is separable: in sum mode it is a sum of one-dimensional convex
    functions J_k(lam_k), in product mode a product of nonnegative ones, so
    in both cases the joint minimum is attained by minimizing each J_k on
    its own (exact golden-section search per component).
    """
    caps = hyperrect_lambda_caps(center, radii, p, spec)
    radii = np.asarray(radii, dtype=float).reshape(-1)
    lam = np.zeros(center.n)
    evals, binding = 0, False
    for k in range(center.n):
        comp = ProductDistribution((center.components[k],))
        sub_spec = ObjectiveSpec(spec.mode, [spec.h[k]], [spec.candidates[k]])
        sub = minimize_dual(
            lambda l: dual_value_hyperrect(comp, radii[k:k + 1], p, sub_spec, l,
                                           space.block(k)),
            1, upper_cap=caps[k:k + 1], seed=seed)
        lam[k] = sub.lam[0]
        evals += sub.evaluations
        binding = binding or sub.cap_binding
    records = []
    value = dual_value_hyperrect(center, radii, p, spec, lam, space, records)
    return DualSolution(lam, value, records, binding, evals, True)


def solve_dual_multitransport(center: DiscreteDistribution, budgets, spec: ObjectiveSpec,
                              costs: CostFamily, seed: int = 0) -> DualSolution:
    caps = multitransport_lambda_caps(center, budgets, spec)
    sol = minimize_dual(lambda l: dual_value_multitransport(center, budgets, spec, l, costs),
                        costs.n, upper_cap=caps, seed=seed,
                        subgradient=lambda l: dual_value_multitransport(
                            center, budgets, spec, l, costs, with_subgradient=True))
    records = []
    sol.value = dual_value_multitransport(center, budgets, spec, sol.lam, costs, records)
    sol.inner_records = records
    return sol


# -- the two-point toy instance -------------------------------------------------

TOY_ATOMS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


@dataclass
class ToyResult:
    value_H: float
    value_T: float
    plan_H: TransportPlan
    plan_T: TransportPlan


def toy_strict_improvement(p1: float, p2: float, mass1: float, mass2: float) -> ToyResult:
    """Worst-case mass at (0, 0) for the product reference on {0, 1}^2.

    Reference Q = (p1 d0 + (1-p1) d1) x (p2 d0 + (1-p2) d1), objective the
    indicator of (0, 0), and per-component transport budgets ``mass_k``
    (mass moved over unit distance). Returns the closed-form optimal values
    over the Wasserstein hyperrectangle and the multi-transport
    hyperrectangle with their optimal plans on the atoms
    (0,0), (1,0), (0,1), (1,1).
    """
    for pk, mk in ((p1, mass1), (p2, mass2)):
        if not 0.0 <= pk <= 1.0:
            raise PreconditionError(f"probabilities must lie in [0, 1], got {pk}")
        if mk < 0 or mk > 1.0 - pk + 1e-15:
            raise PreconditionError(f"mass budget {mk} must lie in [0, 1 - {pk}]")
    value_H = p1 * p2 + mass1 * p2 + p1 * mass2 + mass1 * mass2
    value_T = p1 * p2 + mass1 + mass2
    pts = np.array([[0.0], [1.0]])
    pi1 = TransportPlan(pts, pts, [[p1, 0.0], [mass1, 1 - p1 - mass1]])
    pi2 = TransportPlan(pts, pts, [[p2, 0.0], [mass2, 1 - p2 - mass2]])
    plan_H = glue_product_plans([pi1, pi2])
    q = np.array([p1 * p2, (1 - p1) * p2, p1 * (1 - p2), (1 - p1) * (1 - p2)])
    pi_T = np.diag(q)
    pi_T[1, 1] -= mass1
    pi_T[1, 0] += mass1
    pi_T[2, 2] -= mass2
    pi_T[2, 0] += mass2
    if pi_T[1, 1] < -1e-15 or pi_T[2, 2] < -1e-15:
        raise PreconditionError("mass budgets exceed the mass available at (1,0) or (0,1)")
    plan_T = TransportPlan(TOY_ATOMS, TOY_ATOMS, np.clip(pi_T, 0.0, None))
    return ToyResult(value_H, value_T, plan_H, plan_T)


def toy_reference(p1: float, p2: float) -> ProductDistribution:
    pts = np.array([[0.0], [1.0]])
    return ProductDistribution((DiscreteDistribution(pts, [p1, 1 - p1]),
                                DiscreteDistribution(pts, [p2, 1 - p2])))


# -- randomized strong-duality suite --------------------------------------------

def _grid_points(rng, m: int, d: int, exclude=None) -> np.ndarray:
    axis = np.arange(-2.0, 3.0)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    if exclude is not None:
        taken = {tuple(r) for r in np.asarray(exclude)}
        grid = np.array([g for g in grid if tuple(g) not in taken]).reshape(-1, d)
    return grid[rng.choice(len(grid), size=min(m, len(grid)), replace=False)]


def random_duality_instance(rng, max_atoms: int = 6, max_candidates: int = 8) -> dict:
    """A small multi-transport instance on integer grid points.

    n in {1, 2, 3} blocks of dimension 1 or 2, at most ``max_atoms`` centre
    atoms, at most ``max_candidates`` candidates (the centre atoms included),
    Gaussian objective values and budgets in [0.05, 1.5].
    """
    n = int(rng.integers(1, 4))
    dims = tuple(int(v) for v in rng.integers(1, 3, size=n))
    q = float(rng.choice([1.0, 2.0, math.inf]))
    space = PartitionedSpace(dims, q=q)
    atoms = _grid_points(rng, int(rng.integers(1, max_atoms + 1)), space.d)
    J = atoms.shape[0]
    M = int(rng.integers(J, max(J, max_candidates) + 1))
    cand = np.vstack([atoms, _grid_points(rng, M - J, space.d, exclude=atoms)])
    return {"space": space, "p": float(rng.choice([1.0, 2.0])),
            "center": DiscreteDistribution(atoms, rng.dirichlet(np.ones(J))),
            "candidates": cand, "h": rng.normal(size=cand.shape[0]),
            "budgets": rng.uniform(0.05, 1.5, size=n)}


def strong_duality_suite(instances: int = 50, seed: int = 0, max_atoms: int = 6,
                         max_candidates: int = 8) -> list:
    """Primal LP value against the minimized dual on random instances."""
    rng = np.random.Generator(np.random.Philox(seed))
    rows = []
    for i in range(instances):
        inst = random_duality_instance(rng, max_atoms, max_candidates)
        fam = CostFamily.blockwise(inst["space"], inst["p"])
        primal, _ = max_expectation_multitransport(inst["center"], fam, inst["budgets"],
                                                   inst["h"], inst["candidates"])
        sol = solve_dual_multitransport(inst["center"], inst["budgets"],
                                        ObjectiveSpec("general", inst["h"], inst["candidates"]),
                                        fam)
        rows.append({"instance": i, "n": inst["space"].n, "p": inst["p"], "q": inst["space"].q,
                     "atoms": inst["center"].size, "candidates": int(inst["candidates"].shape[0]),
                     "primal": float(primal), "dual": float(sol.value),
                     "gap": abs(float(sol.value) - float(primal)),
                     "cap_binding": bool(sol.cap_binding)})
    return rows
