"""Minimal unsolvable subproblems over variable subsets.

A variable subset is a minimal unsolvable subproblem (MUS) when the problem
induced on it has no solution but every proper subset does. Because
solvability of induced subproblems is monotone (adding variables can only
add constraints) the full lattice of ``2**n`` subsets is computed bottom-up
and the MUSes are its minimal unsolvable elements.
"""
from __future__ import annotations

import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

from . import _kernels
from .csp import Problem, count_solutions, induced_subproblem
from .errors import InputError

MAX_VARIABLES = 20


@dataclass(frozen=True)
class SolvabilityLattice:
    """``solvable[mask]`` for every variable bitmask; bit ``v`` stands for variable ``v``."""

    n: int
    solvable: np.ndarray
    searched: int = 0

    def __getitem__(self, subset) -> bool:
        return bool(self.solvable[as_mask(subset)])


def as_mask(subset) -> int:
    if isinstance(subset, (int, np.integer)):
        return int(subset)
    mask = 0
    for v in subset:
        mask |= 1 << v
    return mask


def mask_members(mask: int) -> tuple[int, ...]:
    return tuple(v for v in range(mask.bit_length()) if mask >> v & 1)


def _check_size(problem: Problem) -> None:
    if problem.n > MAX_VARIABLES:
        raise InputError(f"lattice needs n <= {MAX_VARIABLES}, got {problem.n}")


def build_lattice(problem: Problem, prune: bool = True) -> SolvabilityLattice:
    """Solvability of every induced subproblem.

    With ``prune`` a subset is marked unsolvable without search as soon as one
    of its one-smaller subsets is; the unpruned variant searches every subset
    and serves as a reference.
    """
    _check_size(problem)
    solvable, searched = _kernels.subset_lattice(problem.n, problem.d, problem.allowed, prune)
    return SolvabilityLattice(problem.n, solvable, int(searched))


def brute_force_lattice(problem: Problem) -> SolvabilityLattice:
    """Reference lattice: exhaustive solution count of each induced subproblem."""
    _check_size(problem)
    out = np.empty(1 << problem.n, dtype=bool)
    for mask in range(1 << problem.n):
        sub = induced_subproblem(problem, mask_members(mask))
        out[mask] = count_solutions(sub).count > 0
    return SolvabilityLattice(problem.n, out, 1 << problem.n)


def minimal_unsolvable(lattice: SolvabilityLattice) -> list[int]:
    """Masks that are unsolvable while every one-smaller subset is solvable."""
    sol = lattice.solvable
    found = []
    for mask in np.flatnonzero(~sol):
        mask = int(mask)
        if all(sol[mask ^ (1 << v)] for v in mask_members(mask)):
            found.append(mask)
    return found


@dataclass(frozen=True)
class MusReport:
    mus_list: tuple[tuple[int, ...], ...]
    count: int
    smallest_size: int | None
    size_histogram: dict[int, int]

    @property
    def sizes(self) -> list[int]:
        return sorted(len(s) for s in self.mus_list)


def enumerate_mus(problem: Problem) -> MusReport:
    """All minimal unsolvable variable subsets, smallest first."""
    masks = minimal_unsolvable(build_lattice(problem))
    subsets = sorted((mask_members(m) for m in masks), key=lambda s: (len(s), s))
    if problem.origin:
        subsets = [tuple(problem.origin[v] for v in s) for s in subsets]
    hist = Counter(len(s) for s in subsets)
    return MusReport(
        tuple(subsets),
        len(subsets),
        min(hist) if hist else None,
        dict(sorted(hist.items())),
    )


def _describe(values: Sequence[float]) -> dict:
    return {
        "n": len(values),
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "min": min(values),
        "max": max(values),
        "stddev": statistics.stdev(values) if len(values) > 1 else 0.0,
    }


def mus_sweep_stats(
    problems: Sequence[Problem],
    costs: Sequence[float] | None = None,
    reports: Sequence[MusReport] | None = None,
) -> dict[int, dict]:
    """Summaries of MUS count and smallest MUS size per nogood count.

    With ``costs`` (one per problem) each group also gets the mean cost per
    smallest-MUS size with member counts, and Spearman rank correlations of
    cost against smallest size and against MUS count.
    """
    if not problems:
        raise InputError("no problems to summarise")
    if costs is not None and len(costs) != len(problems):
        raise InputError("need one cost per problem")
    if reports is None:
        reports = [enumerate_mus(p) for p in problems]
    groups: dict[int, list[int]] = defaultdict(list)
    for k, (p, r) in enumerate(zip(problems, reports)):
        if r.count == 0:
            raise InputError(f"problem {k} is solvable; it has no MUS")
        groups[p.m].append(k)

    table = {}
    for m, members in sorted(groups.items()):
        counts = [reports[k].count for k in members]
        smallest = [reports[k].smallest_size for k in members]
        row = {
            "mus_count": _describe(counts),
            "smallest_size": _describe(smallest),
            "multi_mus_fraction": sum(c > 1 for c in counts) / len(counts),
        }
        if costs is not None:
            group_costs = [costs[k] for k in members]
            by_size: dict[int, list[float]] = defaultdict(list)
            for s, c in zip(smallest, group_costs):
                by_size[s].append(c)
            row["cost_by_smallest_size"] = {
                s: {"n": len(v), "mean": statistics.fmean(v), "values": v} for s, v in sorted(by_size.items())
            }
            row["spearman_cost_smallest"] = _spearman(group_costs, smallest)
            row["spearman_cost_count"] = _spearman(group_costs, counts)
        table[m] = row
    return table


def _spearman(a, b) -> float | None:
    if len(a) < 3 or len(set(a)) < 2 or len(set(b)) < 2:
        return None
    return float(sps.spearmanr(a, b).statistic)
