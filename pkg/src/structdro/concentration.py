"""Closed-form ambiguity radii and confidence allocation across components.

For a distribution supported on a set of sup-norm diameter ``rho`` in R^d
(with ``d >= 2p + 1``), the ball of radius :func:`radius_hat` around the
N-sample empirical distribution contains the truth with probability at
least 1 - beta. :func:`allocate_hyperrect` splits beta across independent
blocks and reports the radius of the ball enclosing the resulting
hyperrectangles.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from decimal import Decimal, localcontext
from typing import Sequence

from .errors import InputError, PreconditionError

SQRT2 = math.sqrt(2.0)


def _exponent_inv(q: float) -> float:
    return 0.0 if math.isinf(q) else 1.0 / q


def _nth_root(x: float, d: int) -> float:
    """Correctly rounded x^(1/d) for x > 0 (scaling by 2^d scales it exactly by 2)."""
    with localcontext() as ctx:
        ctx.prec = 60
        return float(Decimal(x) ** (Decimal(1) / Decimal(d)))


def base_constant(d: int, p: float) -> float:
    """C(d, p) = 2^((d-2)/2p) (1/(sqrt2 - 1) + 1/(sqrt2 - 2^(1/2 - p)))^(1/p).

    Pure formula with no dimension precondition.
    """
    inner = 1.0 / (SQRT2 - 1.0) + 1.0 / (SQRT2 - 2.0 ** (0.5 - p))
    return 2.0 ** ((d - 2) / (2.0 * p)) * inner ** (1.0 / p)


def _validate(beta: float, p: float, q: float, d: int) -> None:
    if not 0.0 < beta < 1.0:
        raise InputError(f"beta must lie in (0, 1), got {beta}")
    if p < 1 or q < 1:
        raise InputError(f"exponents must be >= 1, got p={p}, q={q}")
    if d < 2 * p + 1:
        raise PreconditionError(f"the radius formula needs d >= 2p + 1, got d={d}, p={p}")


def constants(d: int, p: float, q: float, beta: float) -> tuple:
    """Return ``(C(d, p), C_hat(beta, p, q, d))``.

    C_hat = d^(1/q) 2^(1/2p) (C(d, p) + (ln 1/beta)^(1/2p)).
    """
    _validate(beta, p, q, d)
    C = base_constant(d, p)
    C_hat = d ** _exponent_inv(q) * 2.0 ** (1.0 / (2 * p)) * (
        C + math.log(1.0 / beta) ** (1.0 / (2 * p)))
    return C, C_hat


def radius_hat(N: int, beta: float, rho: float, p: float, q: float, d: int) -> float:
    """Monolithic ambiguity radius rho * C_hat(beta, p, q, d) * N^(-1/d)."""
    if N < 1:
        raise InputError(f"need at least one sample, got N={N}")
    if not rho > 0:
        raise InputError(f"support diameter must be positive, got {rho}")
    _, C_hat = constants(d, p, q, beta)
    return rho * C_hat / _nth_root(N, d)


def allocation_constant(q: float) -> float:
    """c = (sqrt(2q+1) + 1) / (2 exp((sqrt(2q+1) + 1)^2 / 8)); the q -> inf limit is 0."""
    if math.isinf(q):
        return 0.0
    s = math.sqrt(2.0 * q + 1.0) + 1.0
    return s / (2.0 * math.exp(s * s / 8.0))


def enclosing_ball_radius(radii: Sequence[float], p: float, q: float) -> float:
    """n^max(0, 1/q - 1/p) (sum_k eps_k^p)^(1/p)."""
    radii = [float(r) for r in radii]
    if not radii:
        raise InputError("need at least one radius")
    if any(r < 0 for r in radii):
        raise InputError("radii must be nonnegative")
    n = len(radii)
    factor = n ** max(0.0, _exponent_inv(q) - 1.0 / p)
    return factor * math.fsum(r ** p for r in radii) ** (1.0 / p)


@dataclass
class AllocationResult:
    betas: list
    radii: list
    enclosing_radius: float
    c: float
    d_max: int
    C_hat: float
    monolithic_radius: float

    def to_dict(self) -> dict:
        return asdict(self)


def allocate_hyperrect(N: int, beta: float, rho: float, p: float, q: float,
                       dims: Sequence[int]) -> AllocationResult:
    """Split beta as beta_k = beta d_k / d and size each component ball.

    The enclosing radius is
    c n^(1/p + max(0, 1/q - 1/p)) rho C_hat(beta, p, q, d) N^(-1/d_max).
    """
    dims = [int(k) for k in dims]
    if not dims or any(k < 1 for k in dims):
        raise InputError(f"dims must be positive integers, got {dims}")
    for dk in dims:
        if dk < 2 * p + 1:
            raise PreconditionError(f"every block needs d_k >= 2p + 1, got d_k={dk}, p={p}")
    d, n, d_max = sum(dims), len(dims), max(dims)
    betas = [beta * dk / d for dk in dims]
    radii = [radius_hat(N, b, rho, p, q, dk) for b, dk in zip(betas, dims)]
    _, C_hat = constants(d, p, q, beta)
    c = allocation_constant(q)
    expo = 1.0 / p + max(0.0, _exponent_inv(q) - 1.0 / p)
    eps = c * n ** expo * rho * C_hat / _nth_root(N, d_max)
    return AllocationResult(betas, radii, eps, c, d_max, C_hat, rho * C_hat / _nth_root(N, d))
