"""
Unsolvable problems have their own peak
=======================================

Restricting attention to unsolvable problems, which a filter or a greedy
hill climb can supply, dynamic backtracking still shows a cost peak at a
fixed nogood count. Chronological backtracking does not: its cost only
falls as constraints are added.
"""

# %%
# Generate-select keeps uniform draws that happen to be unsolvable. Below
# about 40 nogoods such draws are too rare for a quick demo.
import numpy as np

from phase_lab.csp import ProblemParams
from phase_lab.generators import GenSpec, Predicate, generate_with_predicate
from phase_lab.solvers import RunProtocol, run_protocol


def median_costs(method, m, problems=15):
    dyn, chrono = [], []
    for i in range(problems):
        spec = GenSpec(ProblemParams(10, 3, m), Predicate("unsolvable"), method, seed=1000 * m + i)
        problem = generate_with_predicate(spec).problem
        dyn.append(run_protocol(problem, "dynamic", RunProtocol(5, i)).median)
        chrono.append(run_protocol(problem, "chronological", RunProtocol(5, i)).median)
    return np.median(dyn), np.median(chrono)


for m in (40, 60, 80, 110, 140):
    d, c = median_costs("generate_select", m)
    print(f"generate-select m={m:3d}   dynamic {d:7.1f}   chronological {c:8.1f}")

# %%
# Hill climbing reaches unsolvable problems with far fewer nogoods by
# swapping nogoods greedily to squeeze out the remaining solutions.
for m in (20, 40, 60):
    d, c = median_costs("hill_climb", m)
    print(f"hill-climb      m={m:3d}   dynamic {d:7.1f}   chronological {c:8.1f}")
