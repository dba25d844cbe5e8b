"""Primal transport LP against the minimized dual on random small instances."""
from structdro.duals import strong_duality_suite

rows = strong_duality_suite(instances=20, seed=3)
for r in rows[:8]:
    print(f"n={r['n']} p={r['p']:.0f} q={r['q']} atoms={r['atoms']} cands={r['candidates']}  "
          f"primal={r['primal']:+.6f} dual={r['dual']:+.6f} gap={r['gap']:.1e}")
print("...")
print("largest gap over", len(rows), "instances:", max(r["gap"] for r in rows))
