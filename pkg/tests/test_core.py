import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structdro.core import (DiscreteDistribution, PartitionedSpace, ProductDistribution, SampleSet,
                            empirical, expand_product, marginalize, product_empirical,
                            product_metric, support_diameter)
from structdro.errors import InputError, ResourceError


def test_product_metric_hand_value():
    sp = PartitionedSpace((1, 1), q=2)
    assert product_metric([0, 0], [3, 4], sp) == pytest.approx(5.0, abs=1e-15)


@pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 3.0, math.inf])
def test_single_block_reduces_to_q_norm(q):
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=4), rng.normal(size=4)
    sp = PartitionedSpace((4,), q=q)
    ref = np.max(np.abs(a - b)) if math.isinf(q) else np.sum(np.abs(a - b) ** q) ** (1 / q)
    assert product_metric(a, b, sp) == pytest.approx(ref, rel=1e-13)


def test_product_metric_identity_and_dimension_check():
    sp = PartitionedSpace((2, 1), q=3)
    x = np.array([0.3, -1.0, 2.0])
    assert product_metric(x, x, sp) == 0.0
    with pytest.raises(InputError):
        product_metric(x, x[:2], sp)


def test_block_metric_is_blockwise_q_norm():
    # blocks are measured with the same q-norm before being combined
    sp = PartitionedSpace((2, 1), q=1)
    assert product_metric([0, 0, 0], [1, 1, 2], sp) == pytest.approx(4.0)
    sp2 = PartitionedSpace((2, 1), q=2)
    assert product_metric([0, 0, 0], [1, 1, 2], sp2) == pytest.approx(math.sqrt(2 + 4))


points = st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=200, deadline=None)
@given(points, points, points, st.sampled_from([1.0, 2.0, 3.5, math.inf]))
def test_triangle_inequality(a, b, c, q):
    sp = PartitionedSpace((1, 3), q=q)
    ab, bc, ac = product_metric(a, b, sp), product_metric(b, c, sp), product_metric(a, c, sp)
    assert ac <= ab + bc + 1e-9
    assert product_metric(a, b, sp) == pytest.approx(product_metric(b, a, sp), abs=1e-15)


def test_space_validation():
    with pytest.raises(InputError):
        PartitionedSpace(())
    with pytest.raises(InputError):
        PartitionedSpace((2, 0))
    with pytest.raises(InputError):
        PartitionedSpace((1,), q=0.5)
    with pytest.raises(InputError):
        PartitionedSpace((1,), lower=[1.0], upper=[0.0])


def test_distribution_validation():
    with pytest.raises(InputError):
        DiscreteDistribution([[0.0], [1.0]], [0.5, 0.6])
    with pytest.raises(InputError):
        DiscreteDistribution([[0.0], [1.0]], [1.5, -0.5])
    d = DiscreteDistribution([[0.0], [1.0]], [0.25, 0.75])
    assert d.mean()[0] == pytest.approx(0.75)
    with pytest.raises(ValueError):
        d.weights[0] = 1.0


def test_empirical_keeps_duplicates():
    s = SampleSet([[1.0, 2.0], [1.0, 2.0]])
    e = empirical(s)
    assert e.size == 2
    np.testing.assert_array_equal(e.weights, [0.5, 0.5])
    assert e.merged().size == 1


def test_empirical_single_and_mean():
    e = empirical(SampleSet([[3.0]]))
    assert e.size == 1 and e.weights[0] == 1.0
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(17, 3))
    np.testing.assert_allclose(empirical(SampleSet(pts)).mean(), pts.mean(axis=0), atol=1e-14)


def test_empty_samples_rejected():
    with pytest.raises(InputError):
        empirical(SampleSet(np.zeros((0, 2))))


def test_product_empirical_split():
    sp = PartitionedSpace((1, 1))
    pe = product_empirical(SampleSet([[0.0, 0.0], [1.0, 1.0]], sp))
    assert pe.n == 2
    for comp in pe.components:
        np.testing.assert_array_equal(comp.atoms.ravel(), [0.0, 1.0])
        np.testing.assert_array_equal(comp.weights, [0.5, 0.5])
    one = product_empirical(SampleSet([[0.0, 1.0], [2.0, 3.0]]))
    assert one.n == 1
    np.testing.assert_array_equal(one.components[0].atoms, [[0.0, 1.0], [2.0, 3.0]])


def test_product_empirical_block_means():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(20, 5))
    sp = PartitionedSpace((2, 3))
    pe = product_empirical(SampleSet(pts, sp))
    np.testing.assert_allclose(pe.components[0].mean(), pts[:, :2].mean(axis=0), atol=1e-14)
    np.testing.assert_allclose(pe.components[1].mean(), pts[:, 2:].mean(axis=0), atol=1e-14)


def test_expand_two_coins():
    coin = DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
    joint = expand_product(ProductDistribution((coin, coin)))
    assert joint.size == 4
    np.testing.assert_allclose(joint.weights, 0.25)
    # first component varies fastest
    np.testing.assert_array_equal(joint.atoms, [[0, 0], [1, 0], [0, 1], [1, 1]])


def test_expand_identity_for_one_component():
    d = DiscreteDistribution([[0.0, 1.0], [2.0, 2.0]], [0.3, 0.7])
    joint = expand_product(ProductDistribution((d,)))
    np.testing.assert_array_equal(joint.atoms, d.atoms)
    np.testing.assert_allclose(joint.weights, d.weights)


def test_expand_cap():
    d = DiscreteDistribution(np.arange(100.0)[:, None], np.full(100, 0.01))
    with pytest.raises(ResourceError, match="1000000"):
        expand_product(ProductDistribution((d, d, d)), cap=10**5)


@st.composite
def products(draw):
    n = draw(st.integers(1, 3))
    comps = []
    for _ in range(n):
        m = draw(st.integers(1, 4))
        dk = draw(st.integers(1, 2))
        atoms = draw(st.lists(st.lists(st.integers(-3, 3), min_size=dk, max_size=dk),
                              min_size=m, max_size=m, unique_by=tuple))
        raw = draw(st.lists(st.floats(0.1, 1.0), min_size=m, max_size=m))
        w = np.array(raw) / sum(raw)
        w[-1] = 1.0 - w[:-1].sum()
        comps.append(DiscreteDistribution(np.array(atoms, dtype=float), w))
    return ProductDistribution(tuple(comps))


@settings(max_examples=60, deadline=None)
@given(products())
def test_marginalizing_expansion_recovers_components(prod):
    joint = expand_product(prod)
    assert math.fsum(joint.weights) == pytest.approx(1.0, abs=1e-12)
    sp = PartitionedSpace(prod.block_dims)
    for k, comp in enumerate(prod.components):
        m = marginalize(joint, sp, k)
        ref = comp.merged()
        order_m = np.lexsort(m.atoms.T[::-1])
        order_r = np.lexsort(ref.atoms.T[::-1])
        np.testing.assert_array_equal(m.atoms[order_m], ref.atoms[order_r])
        np.testing.assert_allclose(m.weights[order_m], ref.weights[order_r], atol=1e-12)


def test_serialization_roundtrip():
    d = DiscreteDistribution([[0.0, 1.0], [2.0, 3.5]], [0.4, 0.6])
    assert DiscreteDistribution.from_dict(d.to_dict()).to_dict() == d.to_dict()
    prod = ProductDistribution((d, DiscreteDistribution([[1.0]], [1.0])))
    doc = prod.to_dict()
    assert set(doc) == {"components"}
    assert ProductDistribution.from_dict(doc).to_dict() == doc


def test_order_invariance_of_downstream_values():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(9, 2))
    a = empirical(SampleSet(pts))
    b = empirical(SampleSet(pts[::-1]))
    h = lambda x: np.sin(x[:, 0]) + x[:, 1] ** 2
    assert a.expectation(h(a.atoms)) == pytest.approx(b.expectation(h(b.atoms)), abs=1e-14)


def test_support_diameter_is_sup_norm():
    assert support_diameter([[0, 0], [1, 3], [2, 1]]) == 3.0
