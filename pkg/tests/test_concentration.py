import itertools
import math

import mpmath as mp
import pytest

from structdro.concentration import (allocate_hyperrect, allocation_constant, base_constant,
                                     constants, enclosing_ball_radius, radius_hat)
from structdro.errors import InputError, PreconditionError

mp.mp.dps = 40


def mp_C(d, p):
    inner = 1 / (mp.sqrt(2) - 1) + 1 / (mp.sqrt(2) - mp.power(2, mp.mpf(1) / 2 - p))
    return mp.power(2, mp.mpf(d - 2) / (2 * p)) * mp.power(inner, mp.mpf(1) / p)


def mp_Chat(beta, p, q, d):
    inv_q = 0 if q == math.inf else mp.mpf(1) / q
    return (mp.power(d, inv_q) * mp.power(2, mp.mpf(1) / (2 * p))
            * (mp_C(d, p) + mp.power(mp.log(1 / mp.mpf(beta)), mp.mpf(1) / (2 * p))))


def mp_radius(N, beta, rho, p, q, d):
    return mp.mpf(rho) * mp_Chat(beta, p, q, d) * mp.power(N, -mp.mpf(1) / d)


def mp_c(q):
    s = mp.sqrt(2 * mp.mpf(q) + 1) + 1
    return s / (2 * mp.exp(s * s / 8))


def sig12(a, b):
    return abs(a - float(b)) <= 1e-12 * abs(float(b))


def test_C_2_1():
    assert base_constant(2, 1) == pytest.approx(3.82842712474619, abs=1e-13)
    assert sig12(base_constant(2, 1), mp_C(2, 1))


def test_C_hat_reference_point():
    _, C_hat = constants(3, 1, 2, 0.1)
    assert sig12(C_hat, mp_Chat(0.1, 1, 2, 3))
    # the quoted 16.978 is a truncation of 16.97898...
    assert math.floor(C_hat * 1000) == 16978
    # built by hand from C(3, 1) = sqrt(2) C(2, 1)
    by_hand = math.sqrt(3) * math.sqrt(2) * (math.sqrt(2) * 3.8284271247461903
                                             + math.sqrt(math.log(10)))
    assert C_hat == pytest.approx(by_hand, rel=1e-14)


def test_radius_reference_point():
    assert math.floor(radius_hat(1000, 0.1, 1.0, 1, 2, 3) * 10**4) == 16978
    assert sig12(radius_hat(1000, 0.1, 1.0, 1, 2, 3), mp_radius(1000, 0.1, 1, 1, 2, 3))


def test_c_at_q2():
    c = allocation_constant(2)
    assert abs(c - 0.43702) < 1e-4
    assert sig12(c, mp_c(2))
    assert allocation_constant(math.inf) == 0.0


POINTS = [(N, beta, rho, p, q, d)
          for N, beta, rho, p, q, d in itertools.product(
              [10, 1000, 123457], [0.01, 0.2], [0.5, 3.0], [1, 2], [1, 2, math.inf], [5, 7])]


@pytest.mark.parametrize("N,beta,rho,p,q,d", POINTS)
def test_closed_forms_match_high_precision(N, beta, rho, p, q, d):
    C, C_hat = constants(d, p, q, beta)
    assert sig12(C, mp_C(d, p))
    assert sig12(C_hat, mp_Chat(beta, p, q, d))
    assert sig12(radius_hat(N, beta, rho, p, q, d), mp_radius(N, beta, rho, p, q, d))


@pytest.mark.parametrize("d", [3, 4, 5, 7, 10])
@pytest.mark.parametrize("N", [1, 7, 1000, 98765])
def test_exact_halving(d, N):
    a = radius_hat(N, 0.1, 1.0, 1, 2, d)
    b = radius_hat(N * 2 ** d, 0.1, 1.0, 1, 2, d)
    assert b / a == 0.5


def test_linear_in_rho_and_monotone():
    r = radius_hat(500, 0.05, 1.0, 1, 2, 4)
    assert radius_hat(500, 0.05, 2.0, 1, 2, 4) == 2 * r
    Ns = [1, 10, 100, 10**4, 10**6]
    vals = [radius_hat(N, 0.05, 1.0, 1, 2, 4) for N in Ns]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    betas = [0.01, 0.05, 0.2, 0.5, 0.9]
    vals = [radius_hat(100, b, 1.0, 1, 2, 4) for b in betas]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_C_increasing_in_d(p):
    vals = [base_constant(d, p) for d in range(1, 20)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert all(v >= 1 for v in vals)


def test_preconditions():
    with pytest.raises(PreconditionError):
        constants(2, 1, 2, 0.1)
    with pytest.raises(PreconditionError):
        radius_hat(10, 0.1, 1.0, 2, 2, 4)
    with pytest.raises(InputError):
        constants(3, 1, 2, 1.5)
    with pytest.raises(InputError):
        radius_hat(0, 0.1, 1.0, 1, 2, 3)
    with pytest.raises(PreconditionError):
        allocate_hyperrect(100, 0.1, 1.0, 1, 2, [3, 2])


def test_enclosing_ball():
    assert enclosing_ball_radius([0.7], 2, 3) == pytest.approx(0.7)
    assert enclosing_ball_radius([1, 2, 2], 2, 2) == pytest.approx(3.0)
    # p = 1, q = 2: the exponent max(0, 1/q - 1/p) is 0
    assert enclosing_ball_radius([1, 1], 1, 2) == pytest.approx(2.0)
    assert enclosing_ball_radius([1, 1], 2, 1) == pytest.approx(math.sqrt(2) * math.sqrt(2))
    r = [0.3, 0.9, 0.1]
    assert enclosing_ball_radius(r, 1.5, 1) >= max(r)
    with pytest.raises(InputError):
        enclosing_ball_radius([-1.0], 1, 1)


def test_allocation_basic():
    res = allocate_hyperrect(1000, 0.2, 1.0, 1, 2, [3, 3, 3])
    assert math.fsum(res.betas) == pytest.approx(0.2, abs=1e-12)
    assert len(set(res.radii)) == 1 and len(set(res.betas)) == 1
    assert res.d_max == 3
    assert res.enclosing_radius > 0
    res2 = allocate_hyperrect(1000, 0.2, 1.0, 1, 2, [3, 5])
    assert res2.betas == pytest.approx([0.075, 0.125])
    _, C_hat = constants(8, 1, 2, 0.2)
    expected = allocation_constant(2) * 2 ** 1.0 * C_hat * 1000 ** (-1 / 5)
    assert res2.enclosing_radius == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("beta", [0.01, 0.05, 0.1, 0.3, 0.6])
@pytest.mark.parametrize("dims", [(5, 5), (5, 7), (6, 5, 5), (5, 5, 5, 5), (9, 5)])
def test_C_hat_ratio_exceeds_inverse_c(beta, dims):
    p, q = 2, 2
    d = sum(dims)
    c = allocation_constant(q)
    _, big = constants(d, p, q, beta)
    for dk in dims:
        _, small = constants(dk, p, q, beta * dk / d)
        assert big / small >= 1 / c


@pytest.mark.parametrize("dims", [(3, 3), (3, 4), (5, 5, 5)])
def test_enclosing_radius_beats_monolithic_as_N_grows(dims):
    ratios = []
    for N in (10**3, 10**6, 10**9):
        res = allocate_hyperrect(N, 0.1, 1.0, 1, 2, dims)
        ratios.append(res.enclosing_radius / res.monolithic_radius)
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 0.5 * ratios[0]
