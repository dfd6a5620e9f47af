"""Binary CSP data model, solution counting, and the expected-solution formula.

A problem has ``n`` variables sharing the domain ``{0, ..., d-1}`` and is
constrained by binary nogoods: forbidden pairs of variable-value assignments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import FormatError, InputError

#: Problems with at most this many complete assignments are counted by
#: exhaustive enumeration; larger ones by backtracking.
EXHAUSTIVE_LIMIT = 10**6


def total_nogood_count(n: int, d: int) -> int:
    return math.comb(n, 2) * d * d


def consistent_nogood_count(n: int, d: int) -> int:
    """Number of nogoods that do not rule out one fixed complete assignment."""
    return math.comb(n, 2) * (d * d - 1)


@dataclass(frozen=True)
class ProblemParams:
    n: int
    d: int
    m: int

    def __post_init__(self):
        # n == 0 only arises as the induced subproblem on no variables
        if self.n < 0 or self.d < 1:
            raise InputError(f"need n >= 0 and d >= 1, got n={self.n}, d={self.d}")
        if not 0 <= self.m <= total_nogood_count(self.n, self.d):
            raise InputError(
                f"m={self.m} outside [0, {total_nogood_count(self.n, self.d)}] "
                f"for n={self.n}, d={self.d}"
            )


class Nogood(NamedTuple):
    """A forbidden pair ``var_i = val_i`` and ``var_j = val_j`` with ``var_i < var_j``."""

    var_i: int
    val_i: int
    var_j: int
    val_j: int

    @classmethod
    def make(cls, var_a: int, val_a: int, var_b: int, val_b: int) -> Nogood:
        """Build a canonical nogood; values travel with their variables."""
        if var_a == var_b:
            raise InputError(f"nogood needs two distinct variables, got {var_a} twice")
        if var_a > var_b:
            var_a, val_a, var_b, val_b = var_b, val_b, var_a, val_a
        return cls(int(var_a), int(val_a), int(var_b), int(val_b))

    def is_canonical(self) -> bool:
        return self.var_i < self.var_j


def enumerate_all_nogoods(n: int, d: int) -> list[Nogood]:
    """All ``C(n,2)*d^2`` canonical nogoods in lexicographic order."""
    return [
        Nogood(i, a, j, b)
        for i in range(n)
        for a in range(d)
        for j in range(i + 1, n)
        for b in range(d)
    ]


@lru_cache(maxsize=32)
def _universe(n: int, d: int):
    """Column arrays of the nogood universe plus a tuple-to-index map."""
    ngs = enumerate_all_nogoods(n, d)
    cols = np.array(ngs, dtype=np.int64).reshape(-1, 4)
    index = {ng: k for k, ng in enumerate(ngs)}
    return (
        np.ascontiguousarray(cols[:, 0]),
        np.ascontiguousarray(cols[:, 1]),
        np.ascontiguousarray(cols[:, 2]),
        np.ascontiguousarray(cols[:, 3]),
        index,
    )


def nogood_universe(n: int, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(var_i, val_i, var_j, val_j)`` columns indexed like :func:`enumerate_all_nogoods`."""
    return _universe(n, d)[:4]


def nogood_index(n: int, d: int, ng: Nogood) -> int:
    return _universe(n, d)[4][ng]


@dataclass(frozen=True)
class Problem:
    """An immutable binary CSP.

    ``nogoods`` is kept as a sorted tuple of canonical, distinct nogoods.
    ``origin`` maps each variable to its index in a parent problem when the
    problem was produced by :func:`induced_subproblem`.
    """

    params: ProblemParams
    nogoods: tuple[Nogood, ...]
    origin: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        n, d = self.params.n, self.params.d
        if len(self.nogoods) != self.params.m:
            raise InputError(f"params.m={self.params.m} but {len(self.nogoods)} nogoods given")
        prev = None
        for ng in self.nogoods:
            if not ng.is_canonical():
                raise InputError(f"non-canonical nogood {tuple(ng)}")
            if not (0 <= ng.var_j < n and 0 <= ng.val_i < d and 0 <= ng.val_j < d and ng.var_i >= 0):
                raise InputError(f"nogood {tuple(ng)} out of bounds for n={n}, d={d}")
            if prev is not None and ng <= prev:
                raise InputError(f"nogoods not sorted and distinct at {tuple(ng)}")
            prev = ng

    @classmethod
    def from_nogoods(cls, n: int, d: int, nogoods: Iterable[Sequence[int]]) -> Problem:
        """Build a problem from 4-tuples in any endpoint order.

        Duplicate nogoods (after canonicalisation) are rejected.
        """
        canon = [Nogood.make(*ng) for ng in nogoods]
        unique = sorted(set(canon))
        if len(unique) != len(canon):
            raise InputError("duplicate nogoods")
        return cls(ProblemParams(n, d, len(unique)), tuple(unique))

    @classmethod
    def from_indices(cls, n: int, d: int, indices: Iterable[int]) -> Problem:
        """Build a problem from positions in :func:`enumerate_all_nogoods`."""
        cols = nogood_universe(n, d)
        idx = sorted({int(k) for k in indices})
        ngs = tuple(Nogood(int(cols[0][k]), int(cols[1][k]), int(cols[2][k]), int(cols[3][k])) for k in idx)
        return cls(ProblemParams(n, d, len(ngs)), ngs)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def m(self) -> int:
        return self.params.m

    @cached_property
    def indices(self) -> np.ndarray:
        """Universe positions of the nogoods, ascending."""
        table = _universe(self.n, self.d)[4]
        return np.array([table[ng] for ng in self.nogoods], dtype=np.int64)

    @cached_property
    def allowed(self) -> np.ndarray:
        """Compatibility table used by the compiled kernels (see ``_kernels``)."""
        if self.d > 62:
            raise InputError("domain sizes above 62 are not supported")
        out = np.empty((self.n * self.d, self.n), dtype=np.int64)
        _kernels.build_allowed(self.n, self.d, *nogood_universe(self.n, self.d), self.indices, out)
        return out

    @cached_property
    def conflicts(self) -> tuple[tuple[frozenset, ...], ...]:
        """``conflicts[x][v]`` is the set of ``(y, w)`` pairs forbidden with ``x = v``."""
        table = [[set() for _ in range(self.d)] for _ in range(self.n)]
        for i, a, j, b in self.nogoods:
            table[i][a].add((j, b))
            table[j][b].add((i, a))
        return tuple(tuple(frozenset(s) for s in row) for row in table)


@dataclass(frozen=True)
class SolutionCount:
    count: int
    capped: bool = False


def _check_assignment(problem: Problem, assignment: Mapping[int, int]) -> None:
    for var, val in assignment.items():
        if not 0 <= var < problem.n:
            raise InputError(f"variable {var} out of range for n={problem.n}")
        if not 0 <= val < problem.d:
            raise InputError(f"value {val} out of range for d={problem.d}")


def is_consistent(problem: Problem, assignment: Mapping[int, int]) -> bool:
    """True iff no nogood is fully matched by the (possibly partial) assignment."""
    _check_assignment(problem, assignment)
    return not any(
        assignment.get(i) == a and assignment.get(j) == b for i, a, j, b in problem.nogoods
    )


@lru_cache(maxsize=8)
def _assignment_table(n: int, d: int) -> np.ndarray:
    """All ``d**n`` complete assignments in lexicographic order, variable 0 first."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    grids = np.indices((d,) * n, dtype=np.int8)
    return grids.reshape(n, -1).T.copy()


@lru_cache(maxsize=4)
def _killed_masks(n: int, d: int) -> np.ndarray:
    """Row ``g`` is a packed bitmap of the complete assignments nogood ``g`` rules out."""
    table = _assignment_table(n, d)
    cols = nogood_universe(n, d)
    rows = np.zeros((len(cols[0]), (len(table) + 7) // 8), dtype=np.uint8)
    by_var_val = [[table[:, v] == a for a in range(d)] for v in range(n)]
    for g, (i, a, j, b) in enumerate(zip(*cols)):
        rows[g] = np.packbits(by_var_val[i][a] & by_var_val[j][b])
    return rows


def exhaustive_feasible(n: int, d: int) -> bool:
    return d**n <= EXHAUSTIVE_LIMIT


def killed_bitmap(problem: Problem) -> np.ndarray:
    """Packed bitmap over all complete assignments: set where some nogood is violated."""
    masks = _killed_masks(problem.n, problem.d)
    if problem.m == 0:
        return np.zeros(masks.shape[1], dtype=np.uint8)
    return np.bitwise_or.reduce(masks[problem.indices], axis=0)


def count_solutions(problem: Problem, cap: int | None = None) -> SolutionCount:
    """Number of complete consistent assignments.

    Problems with at most ``EXHAUSTIVE_LIMIT`` assignments are enumerated
    exhaustively; larger ones by forward-checking backtracking. With ``cap``
    the result saturates at ``cap`` and is flagged as capped.
    """
    if cap is not None and cap < 1:
        raise InputError(f"cap must be positive, got {cap}")
    n, d = problem.n, problem.d
    if exhaustive_feasible(n, d):
        total = d**n
        killed = int(np.bitwise_count(killed_bitmap(problem)).sum())
        count = total - killed
    else:
        active = np.ones(n, dtype=np.bool_)
        count = int(_kernels.count_fc(n, d, problem.allowed, active, 0 if cap is None else cap))
    if cap is not None and count >= cap:
        return SolutionCount(cap, True)
    return SolutionCount(count, False)


def is_solvable(problem: Problem) -> bool:
    """Same answer as ``count_solutions(problem, cap=1).count >= 1``, via a search that stops at the first solution."""
    active = np.ones(problem.n, dtype=np.bool_)
    return _kernels.count_fc(problem.n, problem.d, problem.allowed, active, 1) >= 1


def brute_force_count(problem: Problem) -> int:
    """Reference count: test every complete assignment with :func:`is_consistent`."""
    return sum(
        is_consistent(problem, dict(enumerate(values)))
        for values in product(range(problem.d), repeat=problem.n)
    )


def _log_binom(a: float, k: float) -> float:
    return math.lgamma(a + 1) - math.lgamma(k + 1) - math.lgamma(a - k + 1)


def _log_expected(n: int, d: int, m: float) -> float:
    pairs = math.comb(n, 2)
    free = pairs * (d * d - 1)
    total = pairs * d * d
    return n * math.log(d) + _log_binom(free, m) - _log_binom(total, m)


def expected_solution_count(n: int, d: int, m: int) -> float:
    """Mean solution count over uniform random problems with ``m`` nogoods.

    ``d**n * C(C(n,2)(d^2-1), m) / C(C(n,2) d^2, m)``, evaluated in log space.
    """
    if not 0 <= m <= total_nogood_count(n, d):
        raise InputError(f"m={m} outside [0, {total_nogood_count(n, d)}]")
    if m > consistent_nogood_count(n, d):
        return 0.0
    if m == 0:
        return float(d**n)
    return math.exp(_log_expected(n, d, m))


def predicted_crossover(n: int, d: int, tol: float = 1e-3) -> float:
    """Real ``m`` at which the expected solution count equals one.

    Binomials are continued to real arguments through log-gamma and the root
    is bracketed on ``[0, C(n,2)(d^2-1)]`` and bisected.
    """
    if n < 2:
        raise InputError("need at least two variables")
    if d < 2:
        raise InputError("need d >= 2; with one value the crossover is degenerate")
    lo, hi = 0.0, float(consistent_nogood_count(n, d))
    f = lambda m: _log_expected(n, d, m)  # noqa: E731
    if f(hi) > 0:
        raise InputError("expected count never drops to one")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def induced_subproblem(problem: Problem, variables: Iterable[int]) -> Problem:
    """Restrict ``problem`` to ``variables`` and the nogoods lying entirely inside them.

    Kept variables are renumbered ``0..k-1`` in ascending original order;
    ``origin`` of the result maps back to the original indices.
    """
    keep = sorted(set(int(v) for v in variables))
    for v in keep:
        if not 0 <= v < problem.n:
            raise InputError(f"variable {v} out of range for n={problem.n}")
    new_index = {v: k for k, v in enumerate(keep)}
    ngs = tuple(
        Nogood(new_index[i], a, new_index[j], b)
        for i, a, j, b in problem.nogoods
        if i in new_index and j in new_index
    )
    base = problem.origin
    origin = tuple(base[v] if base is not None else v for v in keep)
    return Problem(ProblemParams(len(keep), problem.d, len(ngs)), tuple(sorted(ngs)), origin)


# ---------------------------------------------------------------------------
# instance files


def format_problem(problem: Problem) -> str:
    lines = [f"csp {problem.n} {problem.d} {problem.m}"]
    lines += [f"{i} {a} {j} {b}" for i, a, j, b in problem.nogoods]
    return "\n".join(lines) + "\n"


def parse_problem(text: str) -> Problem:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty instance")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "csp":
        raise FormatError(f"bad header line: {lines[0]!r}")
    try:
        n, d, m = (int(x) for x in head[1:])
    except ValueError:
        raise FormatError(f"bad header line: {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != m:
        raise FormatError(f"header declares m={m} but file has {len(body)} nogood lines")
    ngs = []
    for ln in body:
        parts = ln.split()
        if len(parts) != 4:
            raise FormatError(f"bad nogood line: {ln!r}")
        try:
            ng = Nogood(*(int(x) for x in parts))
        except ValueError:
            raise FormatError(f"bad nogood line: {ln!r}") from None
        if not ng.is_canonical():
            raise FormatError(f"non-canonical nogood line: {ln!r}")
        if ngs and ng == ngs[-1]:
            raise FormatError(f"duplicate nogood: {ln!r}")
        if ngs and ng < ngs[-1]:
            raise FormatError(f"nogoods not sorted at: {ln!r}")
        ngs.append(ng)
    try:
        return Problem(ProblemParams(n, d, m), tuple(ngs))
    except InputError as exc:
        raise FormatError(str(exc)) from None


def write_problem(problem: Problem, path: str | Path) -> None:
    Path(path).write_text(format_problem(problem), encoding="utf-8")


def read_problem(path: str | Path) -> Problem:
    return parse_problem(Path(path).read_text(encoding="utf-8"))
