"""Instrumented chronological and dynamic backtracking.

Cost is the number of nodes: one node per value assignment event, including
assignments that are immediately found to clash with an earlier variable.
Both solvers check a new assignment only against variables that are already
assigned; there is no lookahead.
"""
from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from typing import Callable, Literal

from .csp import Problem
from .seeding import derive_seed

SOLUTION = "solution"
UNSOLVABLE = "unsolvable"
CENSORED = "censored"


@dataclass(frozen=True)
class SearchOutcome:
    status: str
    nodes: int
    seed: int | None = None
    assignment: dict[int, int] | None = None

    @property
    def solved(self) -> bool:
        return self.status == SOLUTION


def _conflict_masks(problem: Problem) -> list[int]:
    """Per ``x*d + v``, a bitmask over ``y*d + w`` of the pairs forbidden with ``x = v``."""
    d = problem.d
    masks = [0] * (problem.n * d)
    for i, a, j, b in problem.nogoods:
        masks[i * d + a] |= 1 << (j * d + b)
        masks[j * d + b] |= 1 << (i * d + a)
    return masks


def _as_rng(rng: random.Random | int | None) -> tuple[random.Random, int | None]:
    if isinstance(rng, random.Random):
        return rng, None
    return random.Random(rng), rng


def chronological_backtrack(
    problem: Problem, rng: random.Random | int | None = None, max_nodes: int | None = None
) -> SearchOutcome:
    """Depth-first search with a random static variable order.

    Values of a variable are tried in a fresh random order each time the
    search descends to it. A run that exceeds ``max_nodes`` is reported as
    censored.
    """
    rng, seed = _as_rng(rng)
    n, d = problem.n, problem.d
    if n == 0:
        return SearchOutcome(SOLUTION, 0, seed, {})
    masks = _conflict_masks(problem)
    order = list(range(n))
    rng.shuffle(order)
    value = [-1] * n
    used = 0  # bitmask of current (variable, value) pairs
    pending: list[list[int]] = [[] for _ in range(n)]
    values = list(range(d))
    pending[0] = rng.sample(values, d)
    depth = 0
    nodes = 0
    while depth >= 0:
        x = order[depth]
        if value[x] >= 0:
            used &= ~(1 << (x * d + value[x]))
            value[x] = -1
        if not pending[depth]:
            depth -= 1
            continue
        v = pending[depth].pop()
        nodes += 1
        if max_nodes is not None and nodes > max_nodes:
            return SearchOutcome(CENSORED, nodes - 1, seed)
        if masks[x * d + v] & used:
            continue
        value[x] = v
        used |= 1 << (x * d + v)
        depth += 1
        if depth == n:
            return SearchOutcome(SOLUTION, nodes, seed, dict(enumerate(value)))
        pending[depth] = rng.sample(values, d)
    return SearchOutcome(UNSOLVABLE, nodes, seed)


class DynamicBacktracker:
    """Dynamic backtracking with elimination explanations.

    ``elim[x][v]`` is ``None`` or a frozenset of currently assigned variables
    whose values rule out ``x = v``. On a wipeout of ``x`` the union of its
    explanations names the culprit, the most recently assigned variable in
    it. Only the culprit is unassigned; its value is eliminated by the rest
    of the union and every explanation mentioning the culprit is dropped.

    When a tried value clashes with several assigned variables the
    explanation is the earliest assigned of them, which keeps explanations
    valid for as long as possible.

    ``trace``, when given, is called with ``(event, data)`` for ``"assign"``,
    ``"eliminate"`` and ``"backjump"`` events; tests use it to audit
    explanation soundness.
    """

    def __init__(
        self,
        problem: Problem,
        rng: random.Random | int | None = None,
        max_nodes: int | None = None,
        trace: Callable[[str, dict], None] | None = None,
    ):
        self.problem = problem
        self.rng, self.seed = _as_rng(rng)
        self.max_nodes = max_nodes
        self.trace = trace
        n, d = problem.n, problem.d
        self.masks = _conflict_masks(problem)
        self.value = [-1] * n
        self.stamp = [0] * n  # assignment time, for culprit selection
        self.elim: list[list[frozenset | None]] = [[None] * d for _ in range(n)]
        self.used = 0
        self.clock = 0
        self.nodes = 0

    def _assign(self, x: int, v: int) -> None:
        self.clock += 1
        self.value[x] = v
        self.stamp[x] = self.clock
        self.used |= 1 << (x * self.problem.d + v)
        if self.trace:
            self.trace("assign", {"var": x, "value": v})

    def _unassign(self, y: int) -> None:
        self.used &= ~(1 << (y * self.problem.d + self.value[y]))
        self.value[y] = -1

    def _clash_explanation(self, x: int, v: int) -> frozenset | None:
        d = self.problem.d
        hit = self.masks[x * d + v] & self.used
        if not hit:
            return None
        first = None
        while hit:
            low = hit & -hit
            y = (low.bit_length() - 1) // d
            if first is None or self.stamp[y] < self.stamp[first]:
                first = y
            hit ^= low
        return frozenset((first,))

    def _eliminate(self, x: int, v: int, why: frozenset) -> None:
        self.elim[x][v] = why
        if self.trace:
            self.trace("eliminate", {"var": x, "value": v, "because": why,
                                     "context": {y: self.value[y] for y in why}})

    def _try_variable(self, x: int) -> bool:
        """Assign ``x`` if some value survives; False on wipeout."""
        d = self.problem.d
        elim_x = self.elim[x]
        rng = self.rng
        while True:
            open_values = [v for v in range(d) if elim_x[v] is None]
            if not open_values:
                return False
            v = open_values[0] if len(open_values) == 1 else rng.choice(open_values)
            self.nodes += 1
            if self.max_nodes is not None and self.nodes > self.max_nodes:
                raise _Censored
            why = self._clash_explanation(x, v)
            if why is None:
                self._assign(x, v)
                return True
            self._eliminate(x, v, why)

    def run(self) -> SearchOutcome:
        n = self.problem.n
        unassigned = list(range(n))
        try:
            while unassigned:
                x = unassigned[self.rng.randrange(len(unassigned))]
                if self._try_variable(x):
                    unassigned.remove(x)
                    continue
                union = frozenset().union(*self.elim[x])
                if not union:
                    return SearchOutcome(UNSOLVABLE, self.nodes, self.seed)
                culprit = max(union, key=self.stamp.__getitem__)
                old = self.value[culprit]
                self._unassign(culprit)
                for row in self.elim:
                    for u, why in enumerate(row):
                        if why is not None and culprit in why:
                            row[u] = None
                if self.trace:
                    self.trace("backjump", {"from": x, "culprit": culprit, "value": old})
                self._eliminate(culprit, old, union - {culprit})
                unassigned.append(culprit)
        except _Censored:
            return SearchOutcome(CENSORED, self.nodes - 1, self.seed)
        return SearchOutcome(SOLUTION, self.nodes, self.seed, dict(enumerate(self.value)))


class _Censored(Exception):
    pass


def dynamic_backtrack(
    problem: Problem, rng: random.Random | int | None = None, max_nodes: int | None = None
) -> SearchOutcome:
    """Run :class:`DynamicBacktracker` once."""
    return DynamicBacktracker(problem, rng, max_nodes).run()


SOLVERS: dict[str, Callable[..., SearchOutcome]] = {
    "chronological": chronological_backtrack,
    "dynamic": dynamic_backtrack,
}


@dataclass(frozen=True)
class RunProtocol:
    runs: int = 100
    base_seed: int = 0
    aggregate: Literal["median", "mean"] = "median"
    max_nodes: int | None = None

    def run_seed(self, problem_id: int, run: int) -> int:
        return derive_seed(self.base_seed, problem_id, run)


@dataclass(frozen=True)
class ProblemCost:
    """Node counts of repeated runs on one problem."""

    solver: str
    nodes: tuple[int, ...]
    statuses: tuple[str, ...] = field(repr=False)
    aggregate: str = "median"

    @property
    def censored(self) -> int:
        return sum(s == CENSORED for s in self.statuses)

    @property
    def median(self) -> float:
        return statistics.median(self.nodes)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.nodes)

    @property
    def cost(self) -> float:
        return self.median if self.aggregate == "median" else self.mean


def run_protocol(problem: Problem, solver: str, protocol: RunProtocol, problem_id: int = 0) -> ProblemCost:
    """Solve ``problem`` ``protocol.runs`` times with derived seeds.

    The per-problem cost is the median (or mean) node count; the raw counts
    are kept for pooled analyses.
    """
    if protocol.runs < 1:
        raise ValueError("runs must be >= 1")
    fn = SOLVERS[solver]
    outcomes = [
        fn(problem, random.Random(protocol.run_seed(problem_id, r)), protocol.max_nodes)
        for r in range(protocol.runs)
    ]
    for out in outcomes:
        if out.status == SOLUTION:
            _assert_sound(problem, out.assignment)
    return ProblemCost(
        solver,
        tuple(o.nodes for o in outcomes),
        tuple(o.status for o in outcomes),
        protocol.aggregate,
    )


def _assert_sound(problem: Problem, assignment: dict[int, int]) -> None:
    for i, a, j, b in problem.nogoods:
        if assignment[i] == a and assignment[j] == b:
            raise AssertionError(f"solver returned an assignment violating {(i, a, j, b)}")
