"""
The easy-hard-easy pattern
==========================

Median dynamic backtracking cost over random problems rises and then falls
as nogoods are added. The peak sits close to where half the problems are
solvable.
"""

# %%
# A reduced version of the fig1 preset: 30 problems per point and
# 5 runs per problem.
from phase_lab import harness

config = harness.preset("fig1", scale=0.03, base_seed=7)
table = harness.run_experiment(config)

# %%
# One line per nogood count. The cost column is the median over problems
# of each problem's median node count.
for point in table:
    cost = point.value("all.dynamic.median_cost")
    frac = point.value("all.solvable_fraction")
    print(f"m={point.axis:4g}  solvable {frac:5.2f}  median nodes {cost:7.1f}  " + "#" * int(cost // 10))
