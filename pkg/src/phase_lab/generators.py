"""Random problem generation.

Four base methods are available: uniform generate-select, hill-climbing
toward a target solvability or solution count, the pre-specified-solution
method, and homogeneous generation with equal nogoods per variable pair.
:func:`generate_with_predicate` wraps them with an acceptance predicate and
attempt accounting, so rare-class frequencies can be read off the results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels
from .csp import (
    Problem,
    ProblemParams,
    SolutionCount,
    _killed_masks,
    consistent_nogood_count,
    count_solutions,
    exhaustive_feasible,
    nogood_universe,
    total_nogood_count,
)
from .errors import GenerationExhausted, InputError

PredicateKind = Literal["any", "solvable", "unsolvable", "exactly_k", "at_least_k"]
Method = Literal["generate_select", "hill_climb", "prespecified_solution", "homogeneous"]

_MODE = {"any": 0, "solvable": 1, "unsolvable": 2, "exactly_k": 3, "at_least_k": 4}


@dataclass(frozen=True)
class Predicate:
    kind: PredicateKind = "any"
    k: int = 0

    def __post_init__(self):
        if self.kind not in _MODE:
            raise InputError(f"unknown predicate {self.kind!r}")
        if self.kind in ("exactly_k", "at_least_k") and self.k < 1:
            raise InputError(f"{self.kind} needs k >= 1")

    @classmethod
    def parse(cls, text: str) -> Predicate:
        """``"solvable"``, ``"unsolvable"``, ``"any"``, ``"exactly:1"``, ``"at_least:2"``."""
        name, _, k = text.replace("-", "_").partition(":")
        if name in ("exactly", "at_least"):
            name += "_k"
        return cls(name, int(k) if k else 0)

    def cap(self) -> int | None:
        return {"solvable": 1, "unsolvable": 1, "exactly_k": self.k + 1, "at_least_k": self.k}.get(self.kind)

    def holds(self, count: int) -> bool:
        if self.kind == "any":
            return True
        if self.kind == "solvable":
            return count >= 1
        if self.kind == "unsolvable":
            return count == 0
        if self.kind == "exactly_k":
            return count == self.k
        return count >= self.k

    def __str__(self) -> str:
        return self.kind if self.kind in ("any", "solvable", "unsolvable") else f"{self.kind[:-2]}:{self.k}"


@dataclass(frozen=True)
class GenSpec:
    params: ProblemParams
    predicate: Predicate = Predicate()
    method: Method = "generate_select"
    max_attempts: int = 10**6
    seed: int = 0
    max_swaps: int = 10**4

    def __post_init__(self):
        if self.max_attempts < 1:
            raise InputError("max_attempts must be positive")
        if self.method == "prespecified_solution" and self.predicate.kind not in ("any", "solvable"):
            raise InputError("prespecified_solution only produces solvable problems")
        if self.method == "homogeneous" and self.params.m % math.comb(self.params.n, 2):
            raise InputError("homogeneous generation needs m divisible by C(n, 2)")
        if self.method == "hill_climb" and self.predicate.kind not in ("solvable", "unsolvable", "exactly_k"):
            raise InputError("hill_climb targets solvable, unsolvable or exactly_k problems")
        if self.method not in ("generate_select", "hill_climb", "prespecified_solution", "homogeneous"):
            raise InputError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class GenResult:
    problem: Problem
    attempts: int
    solution_count: SolutionCount | None = None
    swaps: int = 0
    meta: dict = field(default_factory=dict, compare=False)


def _check_m(params: ProblemParams, limit: int, what: str) -> None:
    if params.m > limit:
        raise InputError(f"m={params.m} exceeds the {limit} available {what}")


def generate_select(params: ProblemParams, rng: np.random.Generator) -> Problem:
    """Problem with ``m`` nogoods drawn uniformly without replacement."""
    n, d, m = params.n, params.d, params.m
    _check_m(params, total_nogood_count(n, d), "nogoods")
    return Problem.from_indices(n, d, rng.choice(total_nogood_count(n, d), m, replace=False))


def generate_prespecified_solution(
    params: ProblemParams, rng: np.random.Generator, return_solution: bool = False
):
    """Pick a random complete assignment, then draw ``m`` nogoods it satisfies."""
    n, d, m = params.n, params.d, params.m
    _check_m(params, consistent_nogood_count(n, d), "nogoods consistent with one assignment")
    solution = rng.integers(0, d, size=n)
    vi, ai, vj, aj = nogood_universe(n, d)
    ok = np.flatnonzero((solution[vi] != ai) | (solution[vj] != aj))
    problem = Problem.from_indices(n, d, rng.choice(ok, m, replace=False))
    if return_solution:
        return problem, {v: int(x) for v, x in enumerate(solution)}
    return problem


def generate_homogeneous(n: int, d: int, per_pair: int, rng: np.random.Generator) -> Problem:
    """Every variable pair receives exactly ``per_pair`` distinct value-pair nogoods."""
    if not 0 <= per_pair <= d * d:
        raise InputError(f"per_pair={per_pair} outside [0, {d * d}]")
    pairs = math.comb(n, 2)
    # rank of each value pair within its variable pair, then map to universe index
    picks = np.argsort(rng.random((pairs, d * d)), axis=1)[:, :per_pair]
    vi, ai, vj, aj = nogood_universe(n, d)
    pair_of = {}
    for g in range(len(vi)):
        pair_of[(int(vi[g]), int(vj[g]), int(ai[g]) * d + int(aj[g]))] = g
    indices = []
    for p, (i, j) in enumerate((i, j) for i in range(n) for j in range(i + 1, n)):
        indices.extend(pair_of[(i, j, int(c))] for c in picks[p])
    return Problem.from_indices(n, d, indices)


# ---------------------------------------------------------------------------
# hill climbing


class _Tracker:
    """Mutable nogood set with fast what-if solution counts.

    Uses per-assignment coverage counts over the exhaustive assignment table,
    so removal and addition effects for every candidate are bitmap popcounts.
    Larger problems fall back to one backtracking count per candidate.
    """

    def __init__(self, n: int, d: int, indices):
        self.n, self.d = n, d
        self.universe = total_nogood_count(n, d)
        self.present = np.zeros(self.universe, dtype=bool)
        self.present[np.asarray(indices, dtype=np.int64)] = True
        self.exhaustive = exhaustive_feasible(n, d)
        if self.exhaustive:
            self.masks = _killed_masks(n, d)
            self.size = d**n
            self.cov = np.zeros(self.size, dtype=np.int32)
            for g in np.flatnonzero(self.present):
                self.cov += self._unpack(g)
            self._refresh()
        else:
            self.count = self._count(self.present)

    def _unpack(self, g: int) -> np.ndarray:
        return np.unpackbits(self.masks[g], count=self.size).astype(np.int32)

    def _refresh(self) -> None:
        self.alive = np.packbits(self.cov == 0)
        self.once = np.packbits(self.cov == 1)
        self.count = int((self.cov == 0).sum())

    def _count(self, present: np.ndarray) -> int:
        p = Problem.from_indices(self.n, self.d, np.flatnonzero(present))
        return count_solutions(p).count

    def problem(self) -> Problem:
        return Problem.from_indices(self.n, self.d, np.flatnonzero(self.present))

    def removal_increase(self, cands: np.ndarray) -> np.ndarray:
        if self.exhaustive:
            return np.bitwise_count(self.masks[cands] & self.once).sum(axis=1).astype(np.int64)
        out = np.empty(len(cands), dtype=np.int64)
        for t, g in enumerate(cands):
            self.present[g] = False
            out[t] = self._count(self.present) - self.count
            self.present[g] = True
        return out

    def addition_decrease(self, cands: np.ndarray) -> np.ndarray:
        if self.exhaustive:
            return np.bitwise_count(self.masks[cands] & self.alive).sum(axis=1).astype(np.int64)
        out = np.empty(len(cands), dtype=np.int64)
        for t, g in enumerate(cands):
            self.present[g] = True
            out[t] = self.count - self._count(self.present)
            self.present[g] = False
        return out

    def remove(self, g: int) -> None:
        self.present[g] = False
        if self.exhaustive:
            self.cov -= self._unpack(g)
            self._refresh()
        else:
            self.count = self._count(self.present)

    def add(self, g: int) -> None:
        self.present[g] = True
        if self.exhaustive:
            self.cov += self._unpack(g)
            self._refresh()
        else:
            self.count = self._count(self.present)


def _pick_min(values: np.ndarray, rng: np.random.Generator) -> int:
    """Position of a minimum of ``values``, uniform among ties."""
    ties = np.flatnonzero(values == values.min())
    return int(ties[rng.integers(len(ties))])


def _greedy_swap(tracker: _Tracker, rng: np.random.Generator, floor: int) -> tuple[int, int]:
    """One remove-then-add step of the greedy descent on solution count.

    Removes the present nogood whose removal raises the count least, then
    scans a random third of the absent nogoods (the one just removed is not
    a candidate) in random order, taking the first whose addition leaves
    fewer solutions than before the removal. Failing that, the scanned
    nogood leaving the fewest solutions is added. Additions that would drop
    the count below ``floor`` are not admissible.
    """
    before = tracker.count
    present = np.flatnonzero(tracker.present)
    removed = int(present[_pick_min(tracker.removal_increase(present), rng)])
    tracker.remove(removed)
    absent = np.flatnonzero(~tracker.present)
    absent = absent[absent != removed]
    order = rng.permutation(len(absent))
    scan = absent[order[: math.ceil(len(absent) / 3)]]
    after = tracker.count - tracker.addition_decrease(scan)
    admissible = after >= floor
    if not admissible.any():
        scan = absent
        after = tracker.count - tracker.addition_decrease(scan)
        admissible = after >= floor
        if not admissible.any():
            tracker.add(removed)
            return removed, removed
    better = np.flatnonzero(admissible & (after < before))
    if len(better):
        added = int(scan[better[0]])
    else:
        masked = np.where(admissible, after, np.iinfo(np.int64).max)
        added = int(scan[_pick_min(masked, rng)])
    tracker.add(added)
    return removed, added


def _draw_until(params: ProblemParams, predicate: Predicate, rng: np.random.Generator, max_attempts: int):
    """Uniform draws until ``predicate`` holds; returns ``(indices, attempts)``."""
    n, d, m = params.n, params.d, params.m
    _check_m(params, total_nogood_count(n, d), "nogoods")
    seed = int(rng.integers(2**32))
    sel, attempts, _ = _kernels.sample_until(
        n, d, m, *nogood_universe(n, d), _MODE[predicate.kind], predicate.k, max_attempts, seed
    )
    if attempts < 0:
        raise GenerationExhausted(
            f"no {predicate} problem with n={n}, d={d}, m={m} in {-attempts} draws", -attempts
        )
    return np.sort(sel), int(attempts)


def hill_climb_unsolvable(
    params: ProblemParams,
    rng: np.random.Generator,
    max_swaps: int = 10**4,
    start: Problem | None = None,
    log: list | None = None,
) -> Problem:
    """Greedy nogood swaps from a random solvable problem until no solution remains.

    ``log``, when given, receives one ``(removed, added, count)`` tuple per swap.
    """
    n, d, m = params.n, params.d, params.m
    if m < d * d:
        # each nogood rules out d**(n-2) of the d**n assignments
        raise GenerationExhausted(f"no unsolvable problem has fewer than {d * d} nogoods", 0)
    if start is None:
        indices, _ = _draw_until(params, Predicate("solvable"), rng, 10**6)
    else:
        indices = start.indices
    tracker = _Tracker(n, d, indices)
    swaps = 0
    while tracker.count > 0:
        if swaps >= max_swaps:
            raise GenerationExhausted(f"still solvable after {swaps} swaps", swaps)
        removed, added = _greedy_swap(tracker, rng, floor=0)
        swaps += 1
        if log is not None:
            log.append((removed, added, tracker.count))
    return tracker.problem()


def hill_climb_to_k_solutions(
    start: Problem,
    k: int,
    rng: np.random.Generator,
    max_swaps: int = 10**4,
    log: list | None = None,
    patience: int | None = 100,
) -> Problem:
    """Greedy nogood swaps until exactly ``k`` solutions remain.

    The climb can stall in a local minimum above ``k``; with ``patience`` it
    gives up after that many swaps without a new lowest count.
    """
    if k < 1:
        raise InputError("k must be positive")
    tracker = _Tracker(start.n, start.d, start.indices)
    if tracker.count < k:
        raise InputError(f"start has {tracker.count} solutions, fewer than k={k}")
    swaps = 0
    best, best_at = tracker.count, 0
    while tracker.count != k:
        if swaps >= max_swaps or (patience is not None and swaps - best_at >= patience):
            raise GenerationExhausted(f"{tracker.count} solutions after {swaps} swaps", swaps)
        removed, added = _greedy_swap(tracker, rng, floor=k)
        swaps += 1
        if tracker.count < best:
            best, best_at = tracker.count, swaps
        if log is not None:
            log.append((removed, added, tracker.count))
    return tracker.problem() if swaps else start


def hill_climb_solvable(
    params: ProblemParams, rng: np.random.Generator, max_restarts: int = 1000, log: list | None = None
) -> Problem:
    """Random removals from an unsolvable problem until solvable, then refill.

    The refill adds, one at a time, a nogood chosen uniformly among the
    absent ones that keep the problem solvable. If none qualifies the whole
    procedure restarts from a fresh unsolvable problem. ``log`` receives the
    solution count after each removal.
    """
    n, d, m = params.n, params.d, params.m
    _check_m(params, consistent_nogood_count(n, d), "nogoods consistent with one assignment")
    for restart in range(max_restarts):
        indices, _ = _draw_until(params, Predicate("unsolvable"), rng, 10**7)
        tracker = _Tracker(n, d, indices)
        removed = 0
        for g in rng.permutation(indices):
            if tracker.count > 0:
                break
            tracker.remove(int(g))
            removed += 1
            if log is not None:
                log.append(tracker.count)
        for _ in range(removed):
            absent = np.flatnonzero(~tracker.present)
            keeps = absent[tracker.addition_decrease(absent) < tracker.count]
            if not len(keeps):
                break
            tracker.add(int(keeps[rng.integers(len(keeps))]))
        else:
            return tracker.problem()
    raise GenerationExhausted(f"no solvable refill in {max_restarts} restarts", max_restarts)


# ---------------------------------------------------------------------------
# predicate-driven generation


def _verify(problem: Problem, predicate: Predicate) -> SolutionCount:
    cap = predicate.cap()
    sc = count_solutions(problem) if problem.n <= 12 or cap is None else count_solutions(problem, cap)
    if not predicate.holds(sc.count):
        raise AssertionError(f"generated problem violates predicate {predicate}")
    return sc


def generate_with_predicate(spec: GenSpec) -> GenResult:
    """Apply the spec's base method until its predicate holds.

    Raises :class:`GenerationExhausted` carrying the attempt count when
    ``max_attempts`` candidates (restarts, for hill climbing) are used up.
    """
    rng = np.random.default_rng(spec.seed)
    params, pred = spec.params, spec.predicate
    meta = {"method": spec.method, "predicate": str(pred)}

    if spec.method == "generate_select":
        indices, attempts = _draw_until(params, pred, rng, spec.max_attempts)
        problem = Problem.from_indices(params.n, params.d, indices)
        return GenResult(problem, attempts, _verify(problem, pred), meta=meta)

    if spec.method == "prespecified_solution":
        problem = generate_prespecified_solution(params, rng)
        return GenResult(problem, 1, _verify(problem, pred), meta=meta)

    if spec.method == "homogeneous":
        per_pair = params.m // math.comb(params.n, 2) if params.n > 1 else 0
        for attempt in range(1, spec.max_attempts + 1):
            problem = generate_homogeneous(params.n, params.d, per_pair, rng)
            cap = pred.cap()
            sc = count_solutions(problem, cap) if pred.kind != "any" else None
            if sc is None or pred.holds(sc.count):
                return GenResult(problem, attempt, sc, meta=meta)
        raise GenerationExhausted(f"no {pred} homogeneous problem in {spec.max_attempts} draws", spec.max_attempts)

    # hill climbing: each attempt is one full climb from a fresh start
    swaps_total = 0
    for attempt in range(1, spec.max_attempts + 1):
        log: list = []
        try:
            if pred.kind == "unsolvable":
                problem = hill_climb_unsolvable(params, rng, spec.max_swaps, log=log)
            elif pred.kind == "solvable":
                problem = hill_climb_solvable(params, rng, max_restarts=1, log=log)
            else:
                start_idx, _ = _draw_until(params, Predicate("at_least_k", pred.k), rng, 10**6)
                start = Problem.from_indices(params.n, params.d, start_idx)
                problem = hill_climb_to_k_solutions(start, pred.k, rng, spec.max_swaps, log=log)
        except GenerationExhausted as exc:
            if pred.kind == "unsolvable" and params.m < params.d**2:
                raise GenerationExhausted(str(exc), attempt) from None
            swaps_total += len(log)
            continue
        swaps_total += len(log)
        if pred.kind == "exactly_k":
            meta["target_procedure"] = "greedy swaps with solution-count floor"
        return GenResult(problem, attempt, _verify(problem, pred), swaps=swaps_total, meta=meta)
    raise GenerationExhausted(f"hill climbing failed {spec.max_attempts} times", spec.max_attempts)
