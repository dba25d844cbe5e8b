"""Where to put a recharging station for two drones.

Each drone is usually far away in the negative quadrant and only sometimes
in the square [0, 2]^2 where it can recharge. With few samples the
joint empirical rarely contains both drones in the square at once; the
multi-transport hyperrectangle recombines the per-drone samples and finds
the right spot more often than a ball around the joint empirical.
"""
from structdro.drone import DroneConfig, run_experiment, sample_positions, solve_hyperrect

cfg = DroneConfig(trials=10)
s = sample_positions(cfg, 0)
sol = solve_hyperrect(s, cfg.budgets, cfg.box)
print(f"trial 0: station {sol.x.round(3)}, lambda {sol.lam.round(2)}, value {sol.value:.5f}, "
      f"{sol.pruned} of {cfg.N ** 2} pairs pruned")

rep = run_experiment(cfg)
print(f"true optimum {rep.x_true}, value {rep.true_value:.5f}")
for method in ("hyperrect", "ball"):
    s = rep.summary[method]
    print(f"{method:>9}: within 0.3 in {s['within_fraction']:.0%} of trials, "
          f"median distance {s['median_dist']:.3f}")
