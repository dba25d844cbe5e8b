"""How big should the ambiguity set be?

Compares one monolithic Wasserstein ball against the per-block radii of a
hyperrectangle as the sample size grows.
"""
from structdro.concentration import allocate_hyperrect, radius_hat

dims = [3, 3, 3]
beta, rho, p, q = 0.1, 1.0, 1, 2

print(f"blocks {dims}, beta={beta}, p={p}, q={q}")
print(f"{'N':>10} {'block radius':>13} {'enclosing':>10} {'monolithic':>11} {'ratio':>6}")
for N in (10**2, 10**4, 10**6, 10**8):
    res = allocate_hyperrect(N, beta, rho, p, q, dims)
    ratio = res.enclosing_radius / res.monolithic_radius
    print(f"{N:>10} {res.radii[0]:>13.4f} {res.enclosing_radius:>10.4f} "
          f"{res.monolithic_radius:>11.4f} {ratio:>6.3f}")

# doubling the sample 2^d times halves the radius exactly
d = 3
print("halving check:", radius_hat(8000, beta, rho, p, q, d) / radius_hat(1000, beta, rho, p, q, d))
