"""Random graphs and 3-coloring by backtracking with the Brelaz heuristic."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .csp import Nogood, Problem, ProblemParams
from .errors import FormatError, InputError
from .solvers import CENSORED, SOLUTION, UNSOLVABLE

COLORS = 3


@dataclass(frozen=True)
class Graph:
    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.node_count < 1:
            raise InputError("graph needs at least one node")
        prev = None
        for u, v in self.edges:
            if not 0 <= u < v < self.node_count:
                raise InputError(f"edge {(u, v)} is not (u < v) within {self.node_count} nodes")
            if prev is not None and (u, v) <= prev:
                raise InputError(f"edges not sorted and distinct at {(u, v)}")
            prev = (u, v)

    @classmethod
    def from_edges(cls, node_count: int, edges) -> Graph:
        canon = sorted({(min(u, v), max(u, v)) for u, v in edges})
        return cls(node_count, tuple(canon))

    @property
    def connectivity(self) -> float:
        """Average degree, ``2 |E| / |V|``."""
        return 2 * len(self.edges) / self.node_count

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(a) for a in adj)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            for w in self.neighbors[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.node_count


def edge_count_for(node_count: int, gamma: float) -> int:
    """Edges needed for connectivity ``gamma``; must come out integral."""
    e = gamma * node_count / 2
    edges = round(e)
    if abs(e - edges) > 1e-9:
        raise InputError(f"gamma={gamma} with {node_count} nodes gives a non-integral edge count {e}")
    if not 0 <= edges <= math.comb(node_count, 2):
        raise InputError(f"{edges} edges do not fit in a simple graph on {node_count} nodes")
    return edges


def random_graph(node_count: int, gamma: float, rng: np.random.Generator) -> Graph:
    """Uniform graph with exactly ``gamma * node_count / 2`` edges."""
    edges = edge_count_for(node_count, gamma)
    picks = np.sort(rng.choice(math.comb(node_count, 2), edges, replace=False))
    # unrank pair indices in (0,1), (0,2), ..., (1,2), ... order
    starts = np.array([u * node_count - u * (u + 1) // 2 for u in range(node_count)])
    us = np.searchsorted(starts, picks, side="right") - 1
    vs = picks - starts[us] + us + 1
    return Graph(node_count, tuple(zip(us.tolist(), vs.tolist())))


def coloring_to_csp(graph: Graph, colors: int = COLORS) -> Problem:
    """One nogood per edge and color forbidding equal colors at both ends."""
    ngs = tuple(Nogood(u, c, v, c) for u, v in graph.edges for c in range(colors))
    return Problem(ProblemParams(graph.node_count, colors, len(ngs)), tuple(sorted(ngs)))


@dataclass(frozen=True)
class ColoringOutcome:
    status: str
    nodes: int
    coloring: dict[int, int] | None = None

    @property
    def colorable(self) -> bool:
        return self.status == SOLUTION


def brelaz_backtrack(
    graph: Graph,
    rng: random.Random | int | None = None,
    max_nodes: int | None = 10**7,
    trace: Callable[[int, list[int], dict], None] | None = None,
) -> ColoringOutcome:
    """Chronological backtracking 3-coloring with Brelaz (DSATUR) ordering.

    The next node has the most distinct neighbor colors, then the most
    uncolored neighbors, remaining ties at random. Colors are tried in the
    order 0, 1, 2 skipping those already on a neighbor. The first two
    assigned nodes keep their first color: any alternative would only
    permute colors, so backtracking into them ends the search as
    uncolorable. Each color assignment is one node.

    ``trace(chosen, candidates, keys)`` is called at every selection, where
    ``keys`` maps each uncolored node to its (saturation, uncolored
    neighbors) pair.
    """
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    n = graph.node_count
    adj = graph.neighbors
    color = [-1] * n
    # seen[v][c]: how many colored neighbors of v carry color c
    seen = [[0] * COLORS for _ in range(n)]
    sat = [0] * n
    free_nbrs = [len(a) for a in adj]
    uncolored = set(range(n))
    stack: list[tuple[int, list[int]]] = []
    nodes = 0

    def select() -> int:
        best_key = None
        best: list[int] = []
        for v in uncolored:
            key = (sat[v], free_nbrs[v])
            if best_key is None or key > best_key:
                best_key = key
                best = [v]
            elif key == best_key:
                best.append(v)
        best.sort()
        pick = best[0] if len(best) == 1 else best[rng.randrange(len(best))]
        if trace is not None:
            trace(pick, best, {v: (sat[v], free_nbrs[v]) for v in uncolored})
        return pick

    def paint(v: int, c: int) -> None:
        color[v] = c
        uncolored.discard(v)
        for w in adj[v]:
            free_nbrs[w] -= 1
            if seen[w][c] == 0:
                sat[w] += 1
            seen[w][c] += 1

    def unpaint(v: int) -> None:
        c = color[v]
        color[v] = -1
        uncolored.add(v)
        for w in adj[v]:
            free_nbrs[w] += 1
            seen[w][c] -= 1
            if seen[w][c] == 0:
                sat[w] -= 1

    def options(v: int) -> list[int]:
        opts = [c for c in range(COLORS) if seen[v][c] == 0]
        opts.reverse()  # popped from the end, so 0 is tried first
        return opts

    v = select()
    stack.append((v, options(v)))
    while stack:
        v, opts = stack[-1]
        if color[v] >= 0:
            unpaint(v)
            if len(stack) <= 2:
                return ColoringOutcome(UNSOLVABLE, nodes)
        if not opts:
            stack.pop()
            continue
        c = opts.pop()
        if len(stack) <= 2:
            opts.clear()
        nodes += 1
        if max_nodes is not None and nodes > max_nodes:
            return ColoringOutcome(CENSORED, nodes - 1)
        paint(v, c)
        if not uncolored:
            return ColoringOutcome(SOLUTION, nodes, dict(enumerate(color)))
        w = select()
        stack.append((w, options(w)))
    return ColoringOutcome(UNSOLVABLE, nodes)


def is_proper(graph: Graph, coloring: dict[int, int]) -> bool:
    return all(coloring[u] != coloring[v] for u, v in graph.edges) and all(
        0 <= coloring[v] < COLORS for v in range(graph.node_count)
    )


# ---------------------------------------------------------------------------
# graph files


def format_graph(graph: Graph) -> str:
    lines = [f"graph {graph.node_count} {len(graph.edges)}"]
    lines += [f"{u} {v}" for u, v in graph.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty graph file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "graph":
        raise FormatError(f"bad header line: {lines[0]!r}")
    try:
        node_count, edge_count = int(head[1]), int(head[2])
        edges = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
    except ValueError:
        raise FormatError("non-integer field in graph file") from None
    if len(edges) != edge_count:
        raise FormatError(f"header declares {edge_count} edges but file has {len(edges)}")
    if any(len(e) != 2 for e in edges):
        raise FormatError("edge lines need exactly two node ids")
    try:
        return Graph(node_count, tuple(edges))
    except InputError as exc:
        raise FormatError(str(exc)) from None


def write_graph(graph: Graph, path: str | Path) -> None:
    Path(path).write_text(format_graph(graph), encoding="utf-8")


def read_graph(path: str | Path) -> Graph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))
