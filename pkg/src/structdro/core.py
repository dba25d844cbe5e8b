"""Partitioned spaces, discrete and product distributions, empirical laws."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, ResourceError

DEFAULT_EXPANSION_CAP = 10**6
WEIGHT_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PartitionedSpace:
    """R^d split into blocks of sizes ``block_dims``, each with the q-norm.

    ``q`` may be ``math.inf`` (max-norm). Optional ``lower``/``upper`` bound
    the support componentwise.
    """

    block_dims: tuple
    q: float = 2.0
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        dims = tuple(int(k) for k in self.block_dims)
        if len(dims) < 1 or any(k < 1 for k in dims):
            raise InputError(f"block_dims must be positive integers, got {self.block_dims!r}")
        object.__setattr__(self, "block_dims", dims)
        q = float(self.q)
        if not q >= 1:
            raise InputError(f"norm exponent q must be >= 1, got {self.q}")
        object.__setattr__(self, "q", q)
        if (self.lower is None) != (self.upper is None):
            raise InputError("lower and upper bounds must be given together")
        if self.lower is not None:
            lo, hi = _frozen(self.lower), _frozen(self.upper)
            if lo.shape != (self.d,) or hi.shape != (self.d,):
                raise InputError("bounds must have length d")
            if np.any(lo > hi):
                raise InputError("lower bound exceeds upper bound")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return sum(self.block_dims)

    @property
    def n(self) -> int:
        return len(self.block_dims)

    @property
    def slices(self) -> list:
        out, start = [], 0
        for dk in self.block_dims:
            out.append(slice(start, start + dk))
            start += dk
        return out

    def block(self, k: int) -> "PartitionedSpace":
        """The k-th block as a single-block space with the same q."""
        if self.lower is None:
            return PartitionedSpace((self.block_dims[k],), self.q)
        s = self.slices[k]
        return PartitionedSpace((self.block_dims[k],), self.q, self.lower[s], self.upper[s])

    def split(self, points) -> list:
        """Split an (..., d) array into a list of per-block arrays."""
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.d:
            raise InputError(f"expected points of dimension {self.d}, got {points.shape[-1]}")
        return [points[..., s] for s in self.slices]


def _qnorm(diff: np.ndarray, q: float) -> np.ndarray:
    if math.isinf(q):
        return np.max(np.abs(diff), axis=-1)
    if q == 2.0:
        return np.sqrt(np.sum(diff * diff, axis=-1))
    return np.sum(np.abs(diff) ** q, axis=-1) ** (1.0 / q)


def block_distances(zeta, xi, space: PartitionedSpace) -> np.ndarray:
    """Per-block q-norm distances between all pairs of rows.

    ``zeta`` is (J, d), ``xi`` is (M, d); the result has shape (n, J, M).
    """
    zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if zeta.shape[1] != space.d or xi.shape[1] != space.d:
        raise InputError(
            f"dimension mismatch: space has d={space.d}, got {zeta.shape[1]} and {xi.shape[1]}")
    out = np.empty((space.n, zeta.shape[0], xi.shape[0]))
    for k, s in enumerate(space.slices):
        diff = zeta[:, None, s] - xi[None, :, s]
        out[k] = _qnorm(diff, space.q)
    return out


def combine_blocks(dists: np.ndarray, q: float) -> np.ndarray:
    """Combine per-block distances (first axis) into the product metric."""
    if math.isinf(q):
        return np.max(dists, axis=0)
    return np.sum(dists ** q, axis=0) ** (1.0 / q)


def product_metric(zeta, xi, space: PartitionedSpace) -> float:
    """Product metric (sum_k rho_k(zeta_k, xi_k)^q)^(1/q) between two points."""
    zeta = np.asarray(zeta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if zeta.shape != (space.d,) or xi.shape != (space.d,):
        raise InputError(f"points must have shape ({space.d},), got {zeta.shape} and {xi.shape}")
    return float(combine_blocks(block_distances(zeta, xi, space), space.q)[0, 0])


def pairwise_metric(zeta, xi, space: PartitionedSpace) -> np.ndarray:
    """(J, M) matrix of product-metric distances."""
    return combine_blocks(block_distances(zeta, xi, space), space.q)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite set of atoms in R^d with probability weights."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise InputError("atoms must be a non-empty (J, d) array")
        if weights.shape[0] != atoms.shape[0]:
            raise InputError(f"{atoms.shape[0]} atoms but {weights.shape[0]} weights")
        if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(weights)):
            raise InputError("atoms and weights must be finite")
        if np.any(weights < 0):
            raise InputError("weights must be nonnegative")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise InputError(f"weights sum to {math.fsum(weights)!r}, not 1")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def expectation(self, values) -> float:
        values = np.asarray(values, dtype=float).reshape(-1)
        return float(self.weights @ values)

    def merged(self) -> "DiscreteDistribution":
        """Merge coincident atoms, summing their weights (sorted by atom)."""
        uniq, inv = np.unique(self.atoms, axis=0, return_inverse=True)
        w = np.zeros(uniq.shape[0])
        np.add.at(w, inv.reshape(-1), self.weights)
        return DiscreteDistribution(uniq, w / w.sum())

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscreteDistribution":
        try:
            return cls(doc["atoms"], doc["weights"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"distribution document needs 'atoms' and 'weights': {exc}") from exc


@dataclass(frozen=True)
class ProductDistribution:
    """Product of per-block discrete distributions."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InputError("a product distribution needs at least one component")
        for c in comps:
            if not isinstance(c, DiscreteDistribution):
                raise InputError("components must be DiscreteDistribution instances")
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def block_dims(self) -> tuple:
        return tuple(c.dim for c in self.components)

    def check_space(self, space: PartitionedSpace) -> None:
        if self.block_dims != space.block_dims:
            raise InputError(
                f"component dims {self.block_dims} do not match space blocks {space.block_dims}")

    def expand(self, cap: int = DEFAULT_EXPANSION_CAP) -> DiscreteDistribution:
        return expand_product(self, cap)

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, doc: dict) -> "ProductDistribution":
        try:
            comps = doc["components"]
        except (KeyError, TypeError) as exc:
            raise InputError("product document needs 'components'") from exc
        return cls(tuple(DiscreteDistribution.from_dict(c) for c in comps))


@dataclass(frozen=True)
class SampleSet:
    """N sample points in R^d together with the partition used to split them."""

    points: np.ndarray
    space: PartitionedSpace = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        space = self.space if self.space is not None else PartitionedSpace((pts.shape[1],))
        if pts.ndim != 2 or pts.shape[1] != space.d:
            raise InputError(f"samples must be (N, {space.d}), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "space", space)

    def __len__(self) -> int:
        return self.points.shape[0]

    def blocks(self) -> list:
        return self.space.split(self.points)


def empirical(samples: SampleSet) -> DiscreteDistribution:
    """Uniform weights 1/N on every sample; duplicates are kept as separate atoms."""
    N = len(samples)
    if N < 1:
        raise InputError("empirical distribution of an empty sample set")
    return DiscreteDistribution(samples.points, np.full(N, 1.0 / N))


def product_empirical(samples: SampleSet) -> ProductDistribution:
    """Product of the per-block empirical distributions."""
    N = len(samples)
    if N < 1:
        raise InputError("empirical distribution of an empty sample set")
    w = np.full(N, 1.0 / N)
    return ProductDistribution(tuple(DiscreteDistribution(b, w) for b in samples.blocks()))


def product_grid_indices(sizes: Sequence[int]) -> np.ndarray:
    """All index tuples of a product grid, first index varying fastest.

    Returns an array of shape (prod(sizes), len(sizes)).
    """
    grids = np.meshgrid(*[np.arange(s) for s in reversed(sizes)], indexing="ij")
    return np.stack([g.reshape(-1) for g in reversed(grids)], axis=1)


def expand_product(prod: ProductDistribution, cap: int = DEFAULT_EXPANSION_CAP) -> DiscreteDistribution:
    """Joint atoms (xi_1^{i_1}, ..., xi_n^{i_n}) with product weights.

    Ordering is lexicographic with the first component varying fastest.
    """
    sizes = [c.size for c in prod.components]
    total = math.prod(sizes)
    if total > cap:
        raise ResourceError(f"product expansion needs {total} atoms, cap is {cap}")
    idx = product_grid_indices(sizes)
    atoms = np.concatenate([c.atoms[idx[:, k]] for k, c in enumerate(prod.components)], axis=1)
    weights = np.prod([c.weights[idx[:, k]] for k, c in enumerate(prod.components)], axis=0)
    return DiscreteDistribution(atoms, weights / math.fsum(weights))


def marginalize(dist: DiscreteDistribution, space: PartitionedSpace, k: int) -> DiscreteDistribution:
    """Block-k marginal with coincident atoms merged."""
    block = space.split(dist.atoms)[k]
    return DiscreteDistribution(block, dist.weights).merged()


def support_diameter(points) -> float:
    """Sup-norm diameter of a finite point set."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return float(np.max(pts.max(axis=0) - pts.min(axis=0)))
