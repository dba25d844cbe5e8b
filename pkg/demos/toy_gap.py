"""Two fair-ish coins and the indicator of (0, 0).

The Wasserstein hyperrectangle only moves mass within each coin, so the
worst case stays a product measure. The multi-transport hyperrectangle may
move joint mass and gets strictly more.
"""
import numpy as np

from structdro.core import PartitionedSpace, expand_product
from structdro.duals import TOY_ATOMS, ObjectiveSpec, solve_dual_multitransport, toy_reference, \
    toy_strict_improvement
from structdro.transport import CostFamily

res = toy_strict_improvement(0.5, 0.5, 0.1, 0.1)
print(f"hyperrectangle worst case: {res.value_H:.4f}")
print(f"multi-transport worst case: {res.value_T:.4f}")
print("multi-transport plan (rows: from, cols: to; atoms (0,0),(1,0),(0,1),(1,1)):")
print(np.round(res.plan_T.pi, 3))

# the dual side gets the same number
spec = ObjectiveSpec("general", lambda x: (np.abs(x).max(axis=1) < 1e-12).astype(float),
                     TOY_ATOMS)
costs = CostFamily.blockwise(PartitionedSpace((1, 1), q=1), 1)
sol = solve_dual_multitransport(expand_product(toy_reference(0.5, 0.5)), [0.1, 0.1], spec, costs)
print(f"dual value {sol.value:.12f} at lambda = {np.round(sol.lam, 6)}")
