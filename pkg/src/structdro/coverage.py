"""Monte Carlo checks of the coverage guarantees and of the independence lemma.

Ground truths are discrete product distributions, so every Wasserstein
distance between an empirical law and the truth is an exact LP.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .concentration import allocate_hyperrect, enclosing_ball_radius
from .core import (DiscreteDistribution, PartitionedSpace, ProductDistribution,
                   expand_product, support_diameter)
from .errors import InputError
from .transport import wasserstein_p


@dataclass
class CoverageConfig:
    """Either ``radii`` or ``beta`` must be given; ``beta`` allocates radii.

    ``rho`` defaults to the sup-norm diameter of the truth's support.
    """

    truth: ProductDistribution
    N: int
    p: float = 1.0
    q: float = 2.0
    trials: int = 2000
    seed: int = 0
    radii: Optional[Sequence[float]] = None
    beta: Optional[float] = None
    rho: Optional[float] = None
    ball: bool = True

    def __post_init__(self):
        if self.N < 1 or int(self.N) != self.N:
            raise InputError(f"N must be a positive integer, got {self.N}")
        if self.trials < 1 or int(self.trials) != self.trials:
            raise InputError(f"trials must be a positive integer, got {self.trials}")
        if (self.radii is None) == (self.beta is None):
            raise InputError("give exactly one of radii and beta")
        if self.radii is not None:
            r = [float(v) for v in self.radii]
            if len(r) != self.truth.n or any(v < 0 for v in r):
                raise InputError("need one nonnegative radius per component")
            self.radii = r

    @property
    def space(self) -> PartitionedSpace:
        return PartitionedSpace(self.truth.block_dims, q=self.q)

    def resolve(self) -> tuple:
        """Per-component radii and the enclosing ball radius."""
        if self.radii is not None:
            return list(self.radii), enclosing_ball_radius(self.radii, self.p, self.q)
        rho = self.rho if self.rho is not None else support_diameter(expand_product(self.truth).atoms)
        alloc = allocate_hyperrect(self.N, self.beta, rho, self.p, self.q, self.truth.block_dims)
        return list(alloc.radii), alloc.enclosing_radius


def draw_indices(truth: ProductDistribution, N: int, rng, coupled: bool = False) -> list:
    """Atom indices of N product samples (one (N,) array per component).

    With ``coupled`` every component is driven by the same uniforms
    (comonotone sampling), which breaks independence on purpose.
    """
    if coupled:
        u = rng.random(N)
        us = [u] * truth.n
    else:
        us = [rng.random(N) for _ in range(truth.n)]
    out = []
    for comp, uk in zip(truth.components, us):
        cdf = np.cumsum(comp.weights)
        idx = np.searchsorted(cdf, uk * cdf[-1], side="right")
        out.append(np.minimum(idx, comp.size - 1))
    return out


def _empirical_from_indices(comp: DiscreteDistribution, idx: np.ndarray) -> DiscreteDistribution:
    counts = np.bincount(idx, minlength=comp.size)
    used = counts > 0
    return DiscreteDistribution(comp.atoms[used], counts[used] / idx.size)


def component_distances(truth: ProductDistribution, idx: list, space: PartitionedSpace,
                        p: float) -> tuple:
    """W_p between each component empirical and the truth, plus the empiricals."""
    emps, dists = [], []
    for k, comp in enumerate(truth.components):
        emp = _empirical_from_indices(comp, idx[k])
        dists.append(wasserstein_p(emp, comp, space.block(k), p)[0])
        emps.append(emp)
    return np.array(dists), emps


@dataclass
class CoverageResult:
    hyperrect_coverage: float
    ball_coverage: Optional[float]
    component_coverages: list
    hyperrect_se: float
    radii: list
    enclosing_radius: float
    trials: int
    distances: np.ndarray = field(repr=False)
    ball_distances: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"hyperrect_coverage": self.hyperrect_coverage,
                "ball_coverage": self.ball_coverage,
                "component_coverages": self.component_coverages,
                "hyperrect_se": self.hyperrect_se, "radii": self.radii,
                "enclosing_radius": self.enclosing_radius, "trials": self.trials}

    def to_csv(self) -> str:
        n = self.distances.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["trial"] + [f"w_{k + 1}" for k in range(n)] + ["covered"]
        if self.ball_distances is not None:
            head += ["w_ball", "ball_covered"]
        w.writerow(head)
        for t in range(self.trials):
            d = self.distances[t]
            row = [t] + [repr(float(v)) for v in d] + [int(np.all(d <= self.radii))]
            if self.ball_distances is not None:
                b = float(self.ball_distances[t])
                row += [repr(b), int(b <= self.enclosing_radius)]
            w.writerow(row)
        return buf.getvalue()


def coverage_mc(cfg: CoverageConfig) -> CoverageResult:
    """Frequency with which the hyperrectangle (and the enclosing ball) holds the truth.

    The hyperrectangle covers when every component empirical is within
    eps_k of its truth component. The ball check compares the expanded
    product empirical with the expanded truth under the product metric.
    """
    radii, eps = cfg.resolve()
    space = cfg.space
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    joint_truth = expand_product(cfg.truth) if cfg.ball else None
    dists = np.zeros((cfg.trials, cfg.truth.n))
    ball_d = np.zeros(cfg.trials) if cfg.ball else None
    for t in range(cfg.trials):
        idx = draw_indices(cfg.truth, cfg.N, rng)
        dists[t], emps = component_distances(cfg.truth, idx, space, cfg.p)
        if cfg.ball:
            center = expand_product(ProductDistribution(tuple(emps)))
            ball_d[t] = wasserstein_p(center, joint_truth, space, cfg.p)[0]
    inside = dists <= np.asarray(radii)[None, :]
    covered = np.all(inside, axis=1)
    cov = float(covered.mean())
    se = math.sqrt(max(cov * (1 - cov), 0.0) / cfg.trials)
    ball_cov = float(np.mean(ball_d <= eps)) if cfg.ball else None
    return CoverageResult(cov, ball_cov, inside.mean(axis=0).tolist(), se, radii, eps,
                          cfg.trials, dists, ball_d)


@dataclass
class ProbeResult:
    joint_freq: float
    product_of_marginals: float
    gap: float
    se: float
    marginal_freqs: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def independence_probe(truth: ProductDistribution, N: int, radii, trials: int, seed: int = 0,
                       p: float = 1.0, q: float = 2.0, coupled: bool = False) -> ProbeResult:
    """Compare the joint frequency of {W_p(emp_k, truth_k) <= eps_k for all k}
    with the product of the per-component frequencies.

    The standard error of the gap comes from the delta method with
    influence psi = (prod I - p_joint) - sum_k (prod_{l != k} p_l)(I_k - p_k).
    """
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if radii.size != truth.n:
        raise InputError("need one radius per component")
    space = PartitionedSpace(truth.block_dims, q=q)
    rng = np.random.Generator(np.random.Philox(seed))
    ind = np.zeros((trials, truth.n), dtype=bool)
    for t in range(trials):
        idx = draw_indices(truth, N, rng, coupled=coupled)
        ind[t] = component_distances(truth, idx, space, p)[0] <= radii
    I = ind.astype(float)
    marg = I.mean(axis=0)
    both = np.prod(I, axis=1)
    joint = float(both.mean())
    prod = float(np.prod(marg))
    if truth.n == 1:
        return ProbeResult(joint, joint, 0.0, 0.0, marg.tolist())
    psi = both - joint
    for k in range(truth.n):
        others = float(np.prod(np.delete(marg, k)))
        psi = psi - others * (I[:, k] - marg[k])
    se = float(np.std(psi) / math.sqrt(trials))
    return ProbeResult(joint, prod, joint - prod, se, marg.tolist())


def random_product_truth(dims: Sequence[int], atoms_per_component: int, seed: int,
                         low: float = 0.0, high: float = 1.0) -> ProductDistribution:
    """A product of discrete laws with random atoms in [low, high]^d_k and Dirichlet weights."""
    rng = np.random.Generator(np.random.Philox(seed))
    comps = []
    for dk in dims:
        atoms = low + (high - low) * rng.random((atoms_per_component, dk))
        w = rng.dirichlet(np.ones(atoms_per_component))
        comps.append(DiscreteDistribution(atoms, w))
    return ProductDistribution(tuple(comps))
