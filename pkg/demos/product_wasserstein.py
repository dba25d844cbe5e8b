"""Wasserstein distance between product laws splits across blocks when p = q."""
import numpy as np

from structdro.core import DiscreteDistribution, PartitionedSpace, ProductDistribution, expand_product
from structdro.transport import wasserstein_p

rng = np.random.default_rng(0)


def rand(m, d):
    return DiscreteDistribution(rng.integers(-2, 3, size=(m, d)).astype(float), rng.dirichlet(np.ones(m)))


space = PartitionedSpace((1, 2), q=2)
P = ProductDistribution((rand(2, 1), rand(3, 2)))
Q = ProductDistribution((rand(3, 1), rand(2, 2)))
joint, plan = wasserstein_p(expand_product(P), expand_product(Q), space, p=2)
parts = [wasserstein_p(a, b, space.block(k), p=2)[0] for k, (a, b) in
         enumerate(zip(P.components, Q.components))]
print(f"W_2^2 joint {joint ** 2:.10f}, sum of blocks {sum(v ** 2 for v in parts):.10f}")
print("optimal joint plan has", int(np.count_nonzero(plan.pi > 1e-12)), "nonzero entries")
