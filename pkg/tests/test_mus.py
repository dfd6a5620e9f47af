import numpy as np
import pytest

from phase_lab.csp import Problem, ProblemParams, count_solutions, enumerate_all_nogoods, induced_subproblem
from phase_lab.errors import InputError
from phase_lab.generators import GenSpec, Predicate, generate_select, generate_with_predicate
from phase_lab.mus import (
    brute_force_lattice,
    build_lattice,
    enumerate_mus,
    mask_members,
    minimal_unsolvable,
    mus_sweep_stats,
)


def full(n, d=3):
    return Problem.from_nogoods(n, d, enumerate_all_nogoods(n, d))


PAIR = Problem.from_nogoods(3, 3, [(0, a, 1, b) for a in range(3) for b in range(3)])


def unsolvable(n, m, seed):
    return generate_with_predicate(GenSpec(ProblemParams(n, 3, m), Predicate("unsolvable"), seed=seed)).problem


def test_lattice_examples():
    empty = build_lattice(Problem.from_nogoods(6, 3, []))
    assert empty.solvable.all()
    pair = build_lattice(PAIR)
    assert {m for m in range(8) if not pair.solvable[m]} == {0b011, 0b111}
    lat = build_lattice(full(4))
    for mask in range(16):
        assert lat.solvable[mask] == (bin(mask).count("1") < 2)


def test_mus_examples():
    assert enumerate_mus(Problem.from_nogoods(5, 3, [])).count == 0
    r = enumerate_mus(PAIR)
    assert r.mus_list == ((0, 1),) and r.smallest_size == 2
    r = enumerate_mus(full(10))
    assert r.count == 45 and r.sizes == [2] * 45


def test_pruned_equals_brute_force():
    for seed in range(100):
        p = unsolvable(8, 40, seed)
        assert np.array_equal(build_lattice(p).solvable, brute_force_lattice(p).solvable)
        assert np.array_equal(build_lattice(p, prune=False).solvable, build_lattice(p).solvable)


def test_pruning_saves_searches():
    p = unsolvable(10, 120, 1)
    assert build_lattice(p).searched < build_lattice(p, prune=False).searched == 1024


def test_mus_properties():
    rng = np.random.default_rng(3)
    for seed in range(30):
        p = unsolvable(10, int(rng.integers(40, 150)), seed)
        lat = build_lattice(p)
        # monotone: adding a variable never restores solvability
        for mask in range(1 << 10):
            if not lat.solvable[mask]:
                assert not any(lat.solvable[mask | (1 << v)] for v in range(10))
        report = enumerate_mus(p)
        assert report.count >= 1
        for s in report.mus_list:
            assert 2 <= len(s) <= 10
            assert count_solutions(induced_subproblem(p, s)).count == 0
            for v in s:
                assert count_solutions(induced_subproblem(p, set(s) - {v})).count > 0
        muses = minimal_unsolvable(lat)
        for mask in np.flatnonzero(~lat.solvable):
            assert any(int(mask) & m == m for m in muses)


def test_solvable_problem_has_no_mus():
    p = generate_select(ProblemParams(10, 3, 30), np.random.default_rng(0))
    assert count_solutions(p).count > 0 and enumerate_mus(p).count == 0


def test_mus_maps_through_origin():
    sub = induced_subproblem(full(6), [1, 4, 5])
    assert enumerate_mus(sub).mus_list == ((1, 4), (1, 5), (4, 5))


def test_size_limit():
    with pytest.raises(InputError):
        build_lattice(Problem.from_nogoods(21, 2, []))


def test_mask_members():
    assert mask_members(0b10110) == (1, 2, 4)
    assert mask_members(0) == ()


def test_sweep_stats():
    problems = [unsolvable(10, m, s) for m in (60, 140) for s in range(12)]
    costs = [float(k) for k in range(len(problems))]
    table = mus_sweep_stats(problems, costs)
    assert set(table) == {60, 140}
    row = table[140]
    assert row["mus_count"]["n"] == 12 and row["mus_count"]["mean"] > table[60]["mus_count"]["mean"]
    assert sum(g["n"] for g in row["cost_by_smallest_size"].values()) == 12
    with pytest.raises(InputError):
        mus_sweep_stats([])
    with pytest.raises(InputError):
        mus_sweep_stats([Problem.from_nogoods(4, 3, [])])
