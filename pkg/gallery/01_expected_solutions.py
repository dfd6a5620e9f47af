"""
Where should the transition be?
===============================

The expected number of solutions of a random problem with ``m`` nogoods
has a closed form. Where it drops to one is a first guess at the
solvable/unsolvable boundary. Here we compare it with solution counts of
sampled problems.
"""

# %%
# The prediction for 10 variables with 3 values each.
import numpy as np

from phase_lab.csp import ProblemParams, count_solutions, expected_solution_count, predicted_crossover
from phase_lab.generators import generate_select

print(f"E[solutions] at m=0:  {expected_solution_count(10, 3, 0):.0f}")
print(f"E[solutions] drops to 1 at m = {predicted_crossover(10, 3):.2f}")

# %%
# Sampled problems agree with the formula on average even though most of
# them have far fewer solutions than the mean. The distribution is heavily
# skewed, so the median falls to zero well before the mean does.
rng = np.random.default_rng(0)
for m in (20, 50, 80, 110):
    counts = [count_solutions(generate_select(ProblemParams(10, 3, m), rng)).count for _ in range(400)]
    print(f"m={m:3d}  formula {expected_solution_count(10, 3, m):9.2f}   "
          f"sample mean {np.mean(counts):9.2f}   median {np.median(counts):7.1f}")
