import itertools
import math
from collections import Counter

import numpy as np
import pytest

from phase_lab.csp import (
    Problem,
    ProblemParams,
    count_solutions,
    enumerate_all_nogoods,
    is_consistent,
    total_nogood_count,
)
from phase_lab.errors import GenerationExhausted, InputError
from phase_lab.generators import (
    GenSpec,
    Predicate,
    generate_homogeneous,
    generate_prespecified_solution,
    generate_select,
    generate_with_predicate,
    hill_climb_solvable,
    hill_climb_to_k_solutions,
    hill_climb_unsolvable,
)

P10 = lambda m: ProblemParams(10, 3, m)  # noqa: E731


def test_generate_select_extremes():
    rng = np.random.default_rng(1)
    full = generate_select(P10(405), rng)
    assert full.nogoods == tuple(enumerate_all_nogoods(10, 3))
    assert count_solutions(full).count == 0
    empty = generate_select(P10(0), rng)
    assert empty.m == 0 and count_solutions(empty).count == 59049
    with pytest.raises(InputError):
        generate_select(P10(406), rng)


def test_generate_select_uniform():
    rng = np.random.default_rng(7)
    params = ProblemParams(3, 2, 1)
    freq = Counter(generate_select(params, rng).nogoods[0] for _ in range(100_000))
    assert len(freq) == 12
    for count in freq.values():
        assert abs(count / 100_000 - 1 / 12) < 0.01


def test_kernel_draws_are_uniform():
    # the compiled rejection loop must also draw uniformly
    spec = lambda s: GenSpec(ProblemParams(3, 2, 1), Predicate("any"), seed=s)  # noqa: E731
    freq = Counter(generate_with_predicate(spec(s)).problem.nogoods[0] for s in range(24_000))
    assert len(freq) == 12
    for count in freq.values():
        assert abs(count / 24_000 - 1 / 12) < 0.01


def test_predicate_parse():
    assert Predicate.parse("exactly:1") == Predicate("exactly_k", 1)
    assert Predicate.parse("at_least:2") == Predicate("at_least_k", 2)
    assert Predicate.parse("unsolvable") == Predicate("unsolvable")
    assert str(Predicate("exactly_k", 3)) == "exactly:3"
    with pytest.raises(InputError):
        Predicate.parse("sometimes")
    with pytest.raises(InputError):
        Predicate("exactly_k", 0)


def test_spec_invariants():
    with pytest.raises(InputError):
        GenSpec(P10(40), Predicate("unsolvable"), "prespecified_solution")
    with pytest.raises(InputError):
        GenSpec(P10(50), Predicate("any"), "homogeneous")
    with pytest.raises(InputError):
        GenSpec(P10(50), Predicate("any"), max_attempts=0)


def test_predicate_generation_and_determinism():
    spec = GenSpec(P10(60), Predicate("unsolvable"), seed=11)
    a, b = generate_with_predicate(spec), generate_with_predicate(spec)
    assert a == b
    assert a.problem.m == 60 and count_solutions(a.problem).count == 0
    assert a.attempts >= 1


def test_exactly_k_at_m0_first_attempt():
    res = generate_with_predicate(GenSpec(P10(0), Predicate("exactly_k", 59049)))
    assert res.attempts == 1 and res.solution_count.count == 59049


def test_exhaustion_reports_attempts():
    spec = GenSpec(P10(10), Predicate("unsolvable"), max_attempts=500)
    with pytest.raises(GenerationExhausted) as info:
        generate_with_predicate(spec)
    assert info.value.attempts == 500


def test_unsolvable_frequency_at_m40():
    # reference frequency 4.5e-5; 40 hits at this rate need about 9e5 draws
    hits, draws = 0, 0
    for s in range(40):
        res = generate_with_predicate(GenSpec(P10(40), Predicate("unsolvable"), max_attempts=10**7, seed=s))
        hits += 1
        draws += res.attempts
    freq = hits / draws
    assert 2.5e-5 < freq < 8e-5


def test_prespecified_solution():
    rng = np.random.default_rng(3)
    for m in (0, 80, 200, 360):
        p, sol = generate_prespecified_solution(P10(m), rng, return_solution=True)
        assert p.m == m and is_consistent(p, sol)
    with pytest.raises(InputError):
        generate_prespecified_solution(P10(361), rng)


def test_prespecified_favours_many_solutions():
    rng = np.random.default_rng(5)
    pre = [count_solutions(generate_prespecified_solution(P10(80), rng)).count for _ in range(500)]
    gs = []
    for s in range(500):
        res = generate_with_predicate(GenSpec(P10(80), Predicate("solvable"), seed=s))
        gs.append(res.solution_count.count)
    assert np.median(pre) > np.median(gs)


def test_homogeneous():
    rng = np.random.default_rng(2)
    assert generate_homogeneous(10, 3, 9, rng).m == 405
    assert generate_homogeneous(10, 3, 0, rng).m == 0
    for _ in range(1000):
        p = generate_homogeneous(5, 3, 4, rng)
        per_pair = Counter((i, j) for i, _, j, _ in p.nogoods)
        assert len(per_pair) == 10 and set(per_pair.values()) == {4}


def _kill_masks(n, d):
    # bit t set when assignment number t violates the nogood
    table = list(itertools.product(range(d), repeat=n))
    return [
        sum(1 << t for t, a in enumerate(table) if a[i] == x and a[j] == y)
        for i, x, j, y in enumerate_all_nogoods(n, d)
    ]


@pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3)])
def test_no_unsolvable_problem_below_d_squared(n, d):
    # removing nogoods never lowers the count, so the maximal sets of size
    # d*d - 1 cover every smaller one
    masks = _kill_masks(n, d)
    everything = (1 << d**n) - 1
    for combo in itertools.combinations(masks, d * d - 1):
        acc = 0
        for mask in combo:
            acc |= mask
        assert acc != everything


def test_no_unsolvable_problem_below_d_squared_sampled():
    # n=4, d=3 has C(54, 8) maximal sets; sample them instead
    masks = _kill_masks(4, 3)
    everything = (1 << 81) - 1
    rng = np.random.default_rng(0)
    for _ in range(100_000):
        acc = 0
        for g in rng.choice(len(masks), 8, replace=False):
            acc |= masks[g]
        assert acc != everything


def test_hill_climb_unsolvable_fails_below_d_squared():
    with pytest.raises(GenerationExhausted):
        hill_climb_unsolvable(P10(8), np.random.default_rng(0))
    with pytest.raises(GenerationExhausted):
        generate_with_predicate(GenSpec(P10(8), Predicate("unsolvable"), "hill_climb"))


@pytest.mark.parametrize("m", [25, 30, 35, 50])
def test_hill_climb_unsolvable_reaches_low_m(m):
    p = hill_climb_unsolvable(P10(m), np.random.default_rng(m))
    assert p.m == m and count_solutions(p).count == 0


def test_hill_climb_removal_is_greedy():
    rng = np.random.default_rng(9)
    start = generate_with_predicate(GenSpec(P10(35), Predicate("solvable"), seed=4)).problem
    log = []
    hill_climb_unsolvable(P10(35), rng, start=start, log=log)
    current = set(start.indices.tolist())
    for removed, added, count in log:
        base = count_solutions(Problem.from_indices(10, 3, current)).count
        rises = {g: count_solutions(Problem.from_indices(10, 3, current - {g})).count - base for g in current}
        assert rises[removed] == min(rises.values())
        current = (current - {removed}) | {added}
        assert len(current) == 35
        assert count_solutions(Problem.from_indices(10, 3, current)).count == count


def test_hill_climb_solvable():
    log = []
    p = hill_climb_solvable(P10(140), np.random.default_rng(1), log=log)
    assert p.m == 140 and count_solutions(p).count >= 1
    assert all(a <= b for a, b in zip(log, log[1:]))
    res = generate_with_predicate(GenSpec(P10(140), Predicate("solvable"), "hill_climb", seed=3))
    assert res.solution_count.count >= 1


@pytest.mark.parametrize("m", [30, 35])
def test_hill_climb_to_one_solution(m):
    res = generate_with_predicate(GenSpec(P10(m), Predicate("exactly_k", 1), "hill_climb", seed=m))
    assert res.problem.m == m and count_solutions(res.problem).count == 1


def test_hill_climb_to_k_fixpoint():
    p = generate_with_predicate(GenSpec(P10(100), Predicate("exactly_k", 1), seed=2)).problem
    log = []
    assert hill_climb_to_k_solutions(p, 1, np.random.default_rng(0), log=log) is p
    assert log == []
    with pytest.raises(InputError):
        hill_climb_to_k_solutions(p, 2, np.random.default_rng(0))


def test_hill_climb_to_k_budget():
    start = generate_select(P10(60), np.random.default_rng(1))
    k = count_solutions(start).count
    assert k > 1
    with pytest.raises(GenerationExhausted):
        hill_climb_to_k_solutions(start, 1, np.random.default_rng(0), max_swaps=1)


def test_post_hoc_verification():
    for kind, m in [("solvable", 90), ("unsolvable", 90), ("at_least_k", 120), ("exactly_k", 100)]:
        pred = Predicate(kind, 2 if kind == "at_least_k" else 1 if kind == "exactly_k" else 0)
        res = generate_with_predicate(GenSpec(P10(m), pred, seed=1))
        assert pred.holds(count_solutions(res.problem).count)
        assert res.problem.m == m


def test_homogeneous_with_predicate():
    res = generate_with_predicate(GenSpec(P10(90), Predicate("solvable"), "homogeneous", seed=0))
    assert res.problem.m == 90 and res.solution_count.count >= 1
    assert math.comb(10, 2) * 2 == 90
