"""
Closed-form bounds across sample sizes
======================================

Evaluate the exact-recovery and detection bounds, the test power between
nearby assignments, and the phase-condition expressions along a sequence
of sample sizes.  Values of 1 or more are flagged vacuous.
"""

# %%
import math

from plantedbisection import (
    bound_report,
    enlargement_factor,
    hellinger_quantities,
    minimax_bounds,
    test_power,
)

p, q = 0.7, 0.1
hq = hellinger_quantities(p, q, 1)
print(f"mu {hq.mu:.5f}  rho {hq.rho:.5f}  lambda {hq.lam:.5f}")

# %%
# Exact-recovery bound (1 + z)^(2n) - 1 shrinks once z = (1 - mu)^(n/2) << 1/n.
for n in (4, 8, 16, 32, 64):
    rep = bound_report(n, p, q, k_n=max(1, math.isqrt(n)))
    flag = "vacuous" if rep["recovery_vacuous"] else ""
    print(f"n={n:3d}  recovery {rep['recovery_mass_bound']:.3e} {flag:8s}"
          f"  detect(k={rep['k_n']}) {rep['detect_mass_bound']:.3e}"
          f"  test power k=1 {test_power(n, 1, p, q):.3e}")

# %%
# Sparse regime: p = a log(n)/n.  The sign of (sqrt a - sqrt b)^2 - 2 decides exact recovery.
for a, b in ((6.0, 1.0), (3.0, 1.0)):
    n = 1000
    rep = bound_report(n, a * math.log(n) / n, b * math.log(n) / n, k_n=10)
    print(f"a={a}, b={b}: ch_value {rep['phase']['ch_value']:+.3f}")

# %%
mm = minimax_bounds(10, 0.9, 0.1, delta=0.1)
print(f"minimax misclassification {mm.misclass_rate_bound:.4e}, "
      f"confidence deficit {mm.confidence_deficit_bound:.3e} (vacuous={mm.confidence_vacuous})")
print("enlargement factor f(0.25) =", enlargement_factor(0.25))
