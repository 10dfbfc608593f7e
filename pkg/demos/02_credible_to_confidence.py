"""
From credible sets to confidence sets
=====================================

A credible set at level 1 - a covers the truth with frequentist probability
at least 1 - a |Theta_n|.  Enlarging it by k-balls buys coverage for
assignments that are close to, but not exactly, the truth.
"""

# %%
from plantedbisection import (
    ModelParams,
    coverage_lower_bound,
    enlarge,
    exact_posterior,
    minimal_diameter_credible,
    minimal_order_credible,
    num_assignments,
    sample_assignment,
    sample_graph,
)

n = 4
params = ModelParams(n, p=0.8, q=0.2)
theta0 = sample_assignment(n, seed=7)
table = exact_posterior(sample_graph(params, theta0, rng_seed=7), params)

# %%
# Two constructions: heaviest-first, and the smallest k-ball around one centre.
a = 0.1 / num_assignments(n)
order = minimal_order_credible(table, 1 - a)
ball = minimal_diameter_credible(table, 1 - a)
print(f"minimal-order: {len(order)} members, diameter {order.diameter}, "
      f"mass {order.level_achieved:.5f}")
print(f"minimal-diameter: centre {ball.center}, radius {ball.radius}, {len(ball)} members")
print("guaranteed coverage", coverage_lower_bound(n, a))

# %%
# The 1-enlargement adds every assignment one pair swap away from a member.
report = enlarge(order, 1)
print(f"enlarged: {report.member_count} members, diameter {report.diameter}, "
      f"truth inside: {theta0 in report}")

# %%
# Coverage over 300 fresh graphs.
hits_d = hits_c = 0
for seed in range(300):
    t0 = sample_assignment(n, seed)
    tab = exact_posterior(sample_graph(params, t0, seed), params)
    cred = minimal_order_credible(tab, 0.8)
    hits_d += t0 in cred
    hits_c += t0 in enlarge(cred, 1)
print(f"level 0.8: credible coverage {hits_d / 300:.3f}, enlarged {hits_c / 300:.3f}")
