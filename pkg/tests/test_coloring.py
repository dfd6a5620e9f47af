import itertools

import numpy as np
import pytest

from phase_lab.coloring import (
    Graph,
    brelaz_backtrack,
    coloring_to_csp,
    edge_count_for,
    format_graph,
    is_proper,
    parse_graph,
    random_graph,
    read_graph,
    write_graph,
)
from phase_lab.csp import count_solutions
from phase_lab.errors import FormatError, InputError
from phase_lab.solvers import dynamic_backtrack

TRIANGLE = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
K4 = Graph.from_edges(4, itertools.combinations(range(4), 2))


def three_colorable(graph):
    # exhaustive over all 3**n colorings via the bitmap counter
    return count_solutions(coloring_to_csp(graph)).count > 0


def test_random_graph_sizes():
    rng = np.random.default_rng(0)
    g = random_graph(100, 4.5, rng)
    assert len(g.edges) == 225 and g.connectivity == 4.5
    assert coloring_to_csp(g).m == 675
    assert random_graph(100, 0.0, rng).edges == ()
    with pytest.raises(InputError):
        edge_count_for(7, 1.0)


def test_random_graph_uniform_pairs():
    rng = np.random.default_rng(1)
    hits = np.zeros((5, 5))
    for _ in range(20_000):
        for u, v in random_graph(5, 0.4, rng).edges:
            hits[u, v] += 1
    upper = hits[np.triu_indices(5, 1)] / 20_000
    assert np.allclose(upper, 0.1, atol=0.01)


def test_conversion():
    p = coloring_to_csp(TRIANGLE)
    assert p.m == 9 and count_solutions(p).count == 6
    k4 = coloring_to_csp(K4)
    assert k4.m == 18 and count_solutions(k4).count == 0
    assert coloring_to_csp(Graph(5, ())).m == 0


def test_oracle_on_known_graphs():
    assert three_colorable(TRIANGLE) and not three_colorable(K4)


def test_small_examples():
    assert brelaz_backtrack(K4, 0).status == "unsolvable"
    cycle = Graph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    out = brelaz_backtrack(cycle, 0)
    assert out.colorable and is_proper(cycle, out.coloring)


def test_path_trace():
    path = Graph.from_edges(3, [(0, 1), (1, 2)])
    picks = []
    out = brelaz_backtrack(path, 0, trace=lambda pick, best, keys: picks.append(pick))
    assert picks[0] == 1 and out.nodes == 3 and out.colorable


def test_heuristic_conformance():
    rng = np.random.default_rng(4)
    steps = 0

    def check(pick, best, keys):
        nonlocal steps
        top = max(keys.values())
        assert keys[pick] == top
        assert sorted(best) == sorted(v for v, k in keys.items() if k == top)
        steps += 1

    for seed in range(50):
        brelaz_backtrack(random_graph(30, 4.6, rng), seed, trace=check)
    assert steps > 500


def test_completeness_against_exhaustive():
    rng = np.random.default_rng(6)
    gammas = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
    for k in range(300):
        g = random_graph(12, gammas[k % 6], rng)
        out = brelaz_backtrack(g, k)
        assert out.colorable == three_colorable(g)
        if out.colorable:
            assert is_proper(g, out.coloring)


def test_agrees_with_csp_solver():
    rng = np.random.default_rng(7)
    for k in range(300):
        g = random_graph(20, [3.0, 4.0, 5.0, 6.0][k % 4], rng)
        assert brelaz_backtrack(g, k).colorable == dynamic_backtrack(coloring_to_csp(g), k).solved


def test_node_cap():
    g = random_graph(100, 4.6, np.random.default_rng(2))
    out = brelaz_backtrack(g, 0, max_nodes=10)
    assert out.status == "censored" and out.nodes == 10


def test_graph_validation():
    with pytest.raises(InputError):
        Graph(3, ((1, 0),))
    with pytest.raises(InputError):
        Graph(3, ((0, 1), (0, 1)))
    with pytest.raises(InputError):
        Graph(0, ())
    assert not Graph(3, ((0, 1),)).is_connected()
    assert TRIANGLE.is_connected()


def test_graph_io(tmp_path):
    text = format_graph(TRIANGLE)
    assert text.splitlines()[0] == "graph 3 3"
    assert parse_graph(text) == TRIANGLE
    write_graph(K4, tmp_path / "k4.graph")
    assert read_graph(tmp_path / "k4.graph") == K4


@pytest.mark.parametrize(
    "text", ["", "csp 3 1\n0 1\n", "graph 3 2\n0 1\n", "graph 3 1\n1 0\n", "graph 3 1\n0 1 2\n", "graph 3 1\na b\n"]
)
def test_parse_graph_rejects(text):
    with pytest.raises(FormatError):
        parse_graph(text)
