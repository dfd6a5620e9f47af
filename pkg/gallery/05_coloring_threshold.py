"""
Three-coloring random graphs
============================

Random graphs with connectivity (average degree) near 4.5 sit on the
boundary between 3-colorable and not. Backtracking with the Brelaz
ordering shows where that boundary lies for 100-node graphs.
"""

# %%
import numpy as np

from phase_lab.coloring import brelaz_backtrack, random_graph

rng = np.random.default_rng(11)
for gamma in (3.6, 4.0, 4.4, 4.8, 5.2):
    outcomes = [brelaz_backtrack(random_graph(100, gamma, rng), k) for k in range(60)]
    colorable = np.mean([o.colorable for o in outcomes])
    nodes = np.median([o.nodes for o in outcomes])
    print(f"gamma={gamma:3.1f}  colorable {colorable:4.2f}  median search nodes {nodes:8.0f}")
