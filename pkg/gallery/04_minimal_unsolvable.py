"""
Minimal unsolvable subproblems
==============================

An unsolvable problem usually contains a small core of variables that is
already unsolvable on its own. Enumerating every variable subset shows how
many such cores exist and how small the smallest one is.
"""

# %%
# One unsolvable problem with 60 nogoods and its cores.
from phase_lab.csp import ProblemParams, count_solutions, induced_subproblem
from phase_lab.generators import GenSpec, Predicate, generate_with_predicate
from phase_lab.mus import build_lattice, enumerate_mus, mus_sweep_stats

problem = generate_with_predicate(GenSpec(ProblemParams(10, 3, 60), Predicate("unsolvable"), seed=3)).problem
report = enumerate_mus(problem)
for core in report.mus_list:
    print("core", core, "solutions when restricted:", count_solutions(induced_subproblem(problem, core)).count)

lattice = build_lattice(problem)
print(f"{int((~lattice.solvable).sum())} of {1 << 10} subsets unsolvable, {lattice.searched} searched")

# %%
# Dense problems have many small cores; sparse ones tend to have a single
# large one.
problems = [
    generate_with_predicate(GenSpec(ProblemParams(10, 3, m), Predicate("unsolvable"), seed=s)).problem
    for m in (50, 90, 140)
    for s in range(20)
]
for m, row in mus_sweep_stats(problems).items():
    print(f"m={m:3d}  mean cores {row['mus_count']['mean']:5.1f}  "
          f"mean smallest size {row['smallest_size']['mean']:4.1f}  "
          f"share with more than one core {row['multi_mus_fraction']:.2f}")
