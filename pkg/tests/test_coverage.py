import csv
import io

import numpy as np
import pytest

from structdro.core import DiscreteDistribution, ProductDistribution
from structdro.coverage import (CoverageConfig, coverage_mc, draw_indices, independence_probe,
                                random_product_truth)
from structdro.errors import InputError


def coin(n):
    c = DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
    return ProductDistribution(tuple([c] * n))


def test_draw_indices_frequencies():
    truth = random_product_truth([2], 4, seed=1)
    rng = np.random.Generator(np.random.Philox(0))
    idx = draw_indices(truth, 200_000, rng)[0]
    freq = np.bincount(idx, minlength=4) / idx.size
    np.testing.assert_allclose(freq, truth.components[0].weights, atol=5e-3)


def test_radii_above_diameter_always_cover():
    truth = random_product_truth([2, 3], 4, seed=2)
    res = coverage_mc(CoverageConfig(truth, 10, radii=[10.0, 10.0], trials=50))
    assert res.hyperrect_coverage == 1.0
    assert res.ball_coverage == 1.0


def test_zero_radii_match_multinomial_probability():
    # two fair coins, N = 2: each empirical is exact with probability 1/2
    res = coverage_mc(CoverageConfig(coin(2), 2, radii=[0.0, 0.0], trials=4000, ball=False))
    assert res.hyperrect_coverage < 1
    assert abs(res.hyperrect_coverage - 0.25) <= 4 * res.hyperrect_se
    for c in res.component_coverages:
        assert abs(c - 0.5) <= 4 * np.sqrt(0.25 / 4000)


def test_allocated_radii_meet_guarantee():
    truth = random_product_truth([3, 3], 5, seed=7)
    res = coverage_mc(CoverageConfig(truth, 30, beta=0.2, trials=300, seed=1))
    assert res.hyperrect_coverage >= 0.8 - 3 * max(res.hyperrect_se, np.sqrt(0.16 / 300))
    assert res.ball_coverage >= 0.8
    # ball centre distance never exceeds the radius sum bound implied by the hyperrectangle
    covered = np.all(res.distances <= np.asarray(res.radii), axis=1)
    assert np.all(res.ball_distances[covered] <= res.enclosing_radius + 1e-9)


def test_coverage_monotone_in_radius():
    truth = random_product_truth([2, 2], 4, seed=3)
    covs = [coverage_mc(CoverageConfig(truth, 20, radii=[r, r], trials=200, seed=5,
                                       ball=False)).hyperrect_coverage
            for r in (0.02, 0.05, 0.1, 0.2, 0.4)]
    assert all(a <= b for a, b in zip(covs, covs[1:]))


def test_deterministic_under_seed():
    truth = random_product_truth([2, 2], 3, seed=4)
    a = coverage_mc(CoverageConfig(truth, 15, radii=[0.1, 0.1], trials=60, seed=9))
    b = coverage_mc(CoverageConfig(truth, 15, radii=[0.1, 0.1], trials=60, seed=9))
    assert a.to_csv() == b.to_csv()
    assert a.to_dict() == b.to_dict()
    rows = list(csv.DictReader(io.StringIO(a.to_csv())))
    assert list(rows[0]) == ["trial", "w_1", "w_2", "covered", "w_ball", "ball_covered"]
    assert len(rows) == 60


def test_joint_coverage_close_to_product_of_marginals():
    truth = random_product_truth([2, 2], 4, seed=5)
    res = coverage_mc(CoverageConfig(truth, 20, radii=[0.12, 0.12], trials=1500, seed=2,
                                     ball=False))
    prod = float(np.prod(res.component_coverages))
    assert abs(res.hyperrect_coverage - prod) <= 4 * res.hyperrect_se + 1e-3


def test_probe_single_component():
    truth = random_product_truth([3], 4, seed=6)
    r = independence_probe(truth, 20, [0.2], trials=100)
    assert r.gap == 0.0 and r.se == 0.0


def test_probe_independent_vs_coupled():
    truth = random_product_truth([2, 2], 4, seed=8)
    base = coverage_mc(CoverageConfig(truth, 20, radii=[1.0, 1.0], trials=300, seed=3,
                                      ball=False))
    med = np.median(base.distances, axis=0)
    ind = independence_probe(truth, 20, med, trials=1500, seed=4)
    assert abs(ind.gap) <= 4 * ind.se
    same = ProductDistribution((truth.components[0], truth.components[0]))
    cpl = independence_probe(same, 20, [med[0], med[0]], trials=1500, seed=4, coupled=True)
    assert cpl.gap > 4 * cpl.se


@pytest.mark.parametrize("kw", [dict(N=0, radii=[0.1]), dict(N=5), dict(N=5, radii=[0.1], beta=0.1),
                                dict(N=5, radii=[-1.0]), dict(N=5, radii=[0.1, 0.1]),
                                dict(N=5, radii=[0.1], trials=0)])
def test_config_validation(kw):
    with pytest.raises(InputError):
        CoverageConfig(coin(1), **kw)
