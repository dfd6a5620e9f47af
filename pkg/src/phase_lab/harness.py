"""Experiment sweeps with resumable persistence and CSV/JSON emission.

An experiment is a list of series. Each series fixes how instances are
generated (or which graphs are drawn), which solvers run on them and which
statistics are reported, and sweeps one axis (nogood count or graph
connectivity). Every random choice is keyed by what it produces, never by
worker or schedule:

* instance seed: ``(base_seed, n, d, m, method, predicate, index)``
* solver protocol seed: ``(base_seed, n, d, m, method, predicate, solver)``,
  expanded per run by :class:`~phase_lab.solvers.RunProtocol`

so the same instance appears in every series and preset that asks for it.

Layout of an output directory::

    config.json
    results.csv, results.json          summary rows
    points/<series>/<axis>/point.json  raw per-instance records
    points/<series>/<axis>/instances/  instance or graph files
    timing.json                        wall times (not part of results)
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import statistics
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import coloring as col
from .csp import Problem, ProblemParams, count_solutions, format_problem, parse_problem
from .errors import GenerationExhausted, InputError
from .generators import GenSpec, Predicate, generate_with_predicate
from .mus import enumerate_mus
from .seeding import derive_seed
from .solvers import RunProtocol, run_protocol
from .stats import fraction_with_ci, mean_with_ci, median_with_ci

log = logging.getLogger(__name__)

CSV_COLUMNS = ["axis", "n_problems", "statistic", "value", "ci_lo", "ci_hi", "censored", "attempts"]

#: statistics a series may request
STATISTICS = {
    "cost",  # median over problems of per-problem cost, per solver
    "mean_cost",  # mean over problems of per-problem cost, per solver
    "solvable_fraction",
    "solution_count",  # mean and median solution counts
    "at_least_2_fraction",
    "mus",  # mean smallest MUS size, MUS count summary
    "cost_by_smallest_mus",  # mean cost per smallest-MUS size (first solver)
    "colorable_fraction",
    "connected_fraction",
    "cost_by_status",  # coloring: median cost of colorable / uncolorable graphs
}


def _key(text: str) -> int:
    return zlib.crc32(text.encode())


@dataclass(frozen=True)
class Series:
    name: str
    axis: tuple[float, ...]
    samples: int
    kind: str = "csp"  # or "coloring"
    n: int = 10
    d: int = 3
    method: str = "generate_select"
    predicate: str = "any"
    solvers: tuple[str, ...] = ("dynamic",)
    runs: int = 10
    statistics: tuple[str, ...] = ("cost",)
    # axis value -> sample count, for sparse points that use fewer problems
    sample_overrides: tuple[tuple[float, int], ...] = ()
    axis_divisor: float = 1.0
    long_running: bool = False

    def __post_init__(self):
        unknown = set(self.statistics) - STATISTICS
        if unknown:
            raise InputError(f"unknown statistics {sorted(unknown)}")
        if self.kind not in ("csp", "coloring"):
            raise InputError(f"unknown series kind {self.kind!r}")
        if self.samples < 1 or self.runs < 1:
            raise InputError("samples and runs must be positive")

    def samples_at(self, value: float) -> int:
        return dict(self.sample_overrides).get(value, self.samples)


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    series: tuple[Series, ...]
    base_seed: int = 0
    out_dir: str | None = None
    node_cap: int | None = None
    coloring_node_cap: int = 10**7
    max_attempts: int = 10**6
    max_swaps: int = 10**4
    include_long: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        series = []
        for s in data.pop("series"):
            s = dict(s)
            for name in ("axis", "solvers", "statistics"):
                if name in s:
                    s[name] = tuple(s[name])
            s["sample_overrides"] = tuple(tuple(p) for p in s.get("sample_overrides", ()))
            series.append(Series(**s))
        return cls(series=tuple(series), **data)

    def fingerprint(self) -> str:
        body = self.to_dict()
        body.pop("out_dir")
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]

    def active_series(self) -> list[Series]:
        return [s for s in self.series if self.include_long or not s.long_running]


# ---------------------------------------------------------------------------
# presets

FULL_RUNS = 100


def _steps(lo: int, hi: int, step: int = 10) -> tuple[int, ...]:
    return tuple(range(lo, hi + 1, step))


def preset(name: str, scale: float = 0.1, base_seed: int = 0, **overrides) -> ExperimentConfig:
    """Named preset configuration.

    Sample and run counts are the full-scale values times ``scale``, never
    below one.
    """

    def k(count: int) -> int:
        return max(1, round(count * scale))

    runs = k(FULL_RUNS)
    if name == "fig1":
        series = [Series("all", _steps(10, 140), k(1000), predicate="any", runs=runs,
                         statistics=("cost", "solvable_fraction"))]
    elif name == "fig2":
        series = [
            Series("gs_solvable_n10", _steps(10, 140), k(1000), predicate="solvable", runs=runs,
                   sample_overrides=((140, k(100)),), axis_divisor=10),
            Series("gs_unsolvable_n10", _steps(30, 140), k(1000), predicate="unsolvable", runs=runs,
                   sample_overrides=((30, k(100)),), axis_divisor=10),
            Series("hc_unsolvable_n10", _steps(10, 70), k(1000), method="hill_climb", predicate="unsolvable",
                   runs=runs, axis_divisor=10),
            Series("gs_solvable_n20", _steps(40, 240, 20), k(500), n=20, predicate="solvable", runs=runs,
                   sample_overrides=((240, k(35)),), axis_divisor=20, long_running=True),
            Series("gs_unsolvable_n20", _steps(100, 240, 20), k(500), n=20, predicate="unsolvable", runs=runs,
                   sample_overrides=((100, k(15)),), axis_divisor=20, long_running=True),
        ]
    elif name == "fig3":
        gammas = tuple(round(2.0 + 0.5 * i, 1) for i in range(11))
        series = [Series("brelaz_100", gammas, k(100_000), kind="coloring", n=100, solvers=("brelaz",), runs=1,
                         statistics=("cost_by_status", "colorable_fraction", "connected_fraction"))]
    elif name == "fig4":
        series = [Series("gs_solvable", _steps(0, 140), k(1000), predicate="solvable", solvers=(),
                         statistics=("solution_count",), sample_overrides=((140, k(100)),))]
    elif name == "fig5":
        series = [
            Series("gs_solvable_n10", _steps(10, 140), k(1000), predicate="solvable", solvers=(),
                   statistics=("at_least_2_fraction",), sample_overrides=((140, k(100)),), axis_divisor=10),
            Series("gs_solvable_n20", _steps(20, 240, 20), k(500), n=20, predicate="solvable", solvers=(),
                   statistics=("at_least_2_fraction",), sample_overrides=((240, k(20)),), axis_divisor=20,
                   long_running=True),
        ]
    elif name == "fig6":
        series = [
            Series("gs_one_solution", _steps(50, 140), k(1000), predicate="exactly_k:1", runs=runs,
                   sample_overrides=((140, k(100)),)),
            Series("hc_one_solution", (25, 30, 35, 40, 50, 60, 70, 80), k(1000), method="hill_climb",
                   predicate="exactly_k:1", runs=runs,
                   sample_overrides=((25, k(100)), (30, k(100)), (35, k(100)))),
        ]
    elif name == "fig7":
        both = ("chronological", "dynamic")
        series = [
            Series("gs_unsolvable", _steps(30, 140), k(1000), predicate="unsolvable", solvers=both, runs=runs,
                   sample_overrides=((30, k(100)),)),
            Series("hc_unsolvable", _steps(10, 70), k(1000), method="hill_climb", predicate="unsolvable",
                   solvers=both, runs=runs),
        ]
    elif name == "fig8":
        series = [
            Series("gs_unsolvable", _steps(30, 140), k(1000), predicate="unsolvable", solvers=(),
                   statistics=("mus",), sample_overrides=((30, k(100)),)),
            Series("hc_unsolvable", _steps(10, 70), k(1000), method="hill_climb", predicate="unsolvable",
                   solvers=(), statistics=("mus",)),
        ]
    elif name == "fig9":
        series = [Series("gs_unsolvable_m60", (60,), k(1000), predicate="unsolvable", runs=runs,
                         statistics=("cost_by_smallest_mus", "mus"))]
    else:
        raise InputError(f"unknown preset {name!r}")
    return ExperimentConfig(name, tuple(series), base_seed=base_seed, **overrides)


PRESETS = tuple(f"fig{i}" for i in range(1, 10))


# ---------------------------------------------------------------------------
# per-instance work


def _class_keys(series: Series, value: float) -> tuple[int, ...]:
    pred = series.predicate if series.kind == "coloring" else str(Predicate.parse(series.predicate))
    return series.n, series.d, _key(f"{value:g}"), _key(series.method), _key(pred)


def instance_seed(base_seed: int, series: Series, value: float, index: int) -> int:
    return derive_seed(base_seed, *_class_keys(series, value), index)


def protocol_seed(base_seed: int, series: Series, value: float, solver: str) -> int:
    return derive_seed(base_seed, *_class_keys(series, value), _key(solver))


def csp_instance(config: ExperimentConfig, series: Series, value: float, index: int) -> dict:
    m = int(value)
    spec = GenSpec(
        ProblemParams(series.n, series.d, m),
        Predicate.parse(series.predicate),
        series.method,
        max_attempts=config.max_attempts,
        seed=instance_seed(config.base_seed, series, value, index),
        max_swaps=config.max_swaps,
    )
    try:
        gen = generate_with_predicate(spec)
    except GenerationExhausted as exc:
        return {"index": index, "failed": True, "attempts": exc.attempts}
    problem = gen.problem
    rec: dict = {"index": index, "failed": False, "attempts": gen.attempts, "swaps": gen.swaps,
                 "seed": spec.seed, "problem": format_problem(problem)}
    stats = set(series.statistics)
    if stats & {"solvable_fraction", "solution_count", "at_least_2_fraction"}:
        cap = 2 if stats == {"at_least_2_fraction"} else None
        sc = count_solutions(problem, cap)
        rec["solutions"] = sc.count
    elif gen.solution_count is not None:
        rec["solutions"] = gen.solution_count.count
    costs = {}
    for solver in series.solvers:
        proto = RunProtocol(series.runs, protocol_seed(config.base_seed, series, value, solver),
                            max_nodes=config.node_cap)
        pc = run_protocol(problem, solver, proto, problem_id=index)
        costs[solver] = {"nodes": list(pc.nodes), "censored": pc.censored, "median": pc.median, "mean": pc.mean}
    rec["costs"] = costs
    if stats & {"mus", "cost_by_smallest_mus"}:
        report = enumerate_mus(problem)
        rec["mus"] = {"count": report.count, "smallest": report.smallest_size, "sizes": report.sizes}
    return rec


def coloring_instance(config: ExperimentConfig, series: Series, value: float, index: int) -> dict:
    seed = instance_seed(config.base_seed, series, value, index)
    graph = col.random_graph(series.n, value, np.random.default_rng(seed))
    outcome = col.brelaz_backtrack(graph, derive_seed(seed, 1), max_nodes=config.coloring_node_cap)
    if outcome.colorable and not col.is_proper(graph, outcome.coloring):
        raise AssertionError("Brelaz search returned an improper coloring")
    return {"index": index, "failed": False, "attempts": 1, "seed": seed,
            "graph": col.format_graph(graph), "status": outcome.status,
            "connected": graph.is_connected(),
            "costs": {"brelaz": {"nodes": [outcome.nodes], "censored": int(outcome.status == "censored"),
                                 "median": outcome.nodes, "mean": outcome.nodes}}}


def _instance_task(args) -> dict:
    config, series, value, index = args
    if series.kind == "coloring":
        return coloring_instance(config, series, value, index)
    return csp_instance(config, series, value, index)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PHASE_LAB_WORKERS", "1")))
    except ValueError:
        return 1


def _map(tasks: list, workers: int) -> list[dict]:
    if workers <= 1 or len(tasks) <= 1:
        return [_instance_task(t) for t in tasks]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_instance_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# ---------------------------------------------------------------------------
# statistics for one point


@dataclass
class SweepPoint:
    series: str
    axis: float
    samples_requested: int
    records: list[dict] = field(repr=False)
    rows: list[dict] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return sum(not r["failed"] for r in self.records) >= self.samples_requested

    @property
    def n_problems(self) -> int:
        return sum(not r["failed"] for r in self.records)

    @property
    def attempts(self) -> int:
        return sum(r["attempts"] for r in self.records)

    def row(self, statistic: str) -> dict:
        for r in self.rows:
            if r["statistic"] == statistic:
                return r
        raise KeyError(statistic)

    def value(self, statistic: str) -> float:
        return self.row(statistic)["value"]


def _row(series: Series, axis: float, n: int, stat: str, value, lo, hi, censored: int, attempts: int) -> dict:
    return {"axis": axis / series.axis_divisor, "n_problems": n, "statistic": f"{series.name}.{stat}",
            "value": value, "ci_lo": lo, "ci_hi": hi, "censored": censored, "attempts": attempts}


def summarize_point(series: Series, value: float, records: list[dict], samples: int) -> SweepPoint:
    """Per-problem aggregates first, then cross-problem statistics with intervals."""
    point = SweepPoint(series.name, value, samples, records)
    ok = [r for r in records if not r["failed"]]
    n, att = len(ok), point.attempts
    rows = point.rows
    if not ok:
        rows.append(_row(series, value, 0, "incomplete", 0, None, None, 0, att))
        return point
    stats = series.statistics
    solvers = series.solvers

    def add(stat, v, lo=None, hi=None, censored=0, count=n):
        rows.append(_row(series, value, count, stat, v, lo, hi, censored, att))

    if "cost" in stats or "mean_cost" in stats:
        for s in solvers:
            per_problem = [r["costs"][s]["median"] for r in ok]
            cens = sum(r["costs"][s]["censored"] for r in ok)
            if "cost" in stats:
                add(f"{s}.median_cost", *median_with_ci(per_problem), censored=cens)
            if "mean_cost" in stats:
                add(f"{s}.mean_cost", *mean_with_ci(per_problem), censored=cens)
    if "solvable_fraction" in stats:
        fs = fraction_with_ci(sum(r["solutions"] > 0 for r in ok), n)
        add("solvable_fraction", fs.f, *fs.ci)
    if "at_least_2_fraction" in stats:
        fs = fraction_with_ci(sum(r["solutions"] >= 2 for r in ok), n)
        add("at_least_2_fraction", fs.f, *fs.ci)
    if "solution_count" in stats:
        counts = [r["solutions"] for r in ok]
        add("mean_solutions", *mean_with_ci(counts))
        add("median_solutions", *median_with_ci(counts))
    if "mus" in stats:
        add("mean_smallest_mus", *mean_with_ci([r["mus"]["smallest"] for r in ok]))
        add("mean_mus_count", *mean_with_ci([r["mus"]["count"] for r in ok]))
        counts = [r["mus"]["count"] for r in ok]
        add("stddev_mus_count", statistics.stdev(counts) if n > 1 else 0.0)
        add("min_mus_count", min(counts))
        add("max_mus_count", max(counts))
        fs = fraction_with_ci(sum(c > 1 for c in counts), n)
        add("multi_mus_fraction", fs.f, *fs.ci)
    if "cost_by_smallest_mus" in stats and solvers:
        s = solvers[0]
        groups: dict[int, list[float]] = {}
        for r in ok:
            groups.setdefault(r["mus"]["smallest"], []).append(r["costs"][s]["median"])
        for size in sorted(groups):
            mean, lo, hi = mean_with_ci(groups[size])
            rows.append({"axis": size, "n_problems": len(groups[size]),
                         "statistic": f"{series.name}.{s}.mean_cost_by_smallest_mus",
                         "value": mean, "ci_lo": lo, "ci_hi": hi, "censored": 0, "attempts": att})
    if "colorable_fraction" in stats:
        fs = fraction_with_ci(sum(r["status"] == "solution" for r in ok), n)
        add("colorable_fraction", fs.f, *fs.ci)
    if "connected_fraction" in stats:
        fs = fraction_with_ci(sum(r["connected"] for r in ok), n)
        add("connected_fraction", fs.f, *fs.ci)
    if "cost_by_status" in stats:
        for label, wanted in (("colorable", ("solution",)), ("uncolorable", ("unsolvable",))):
            group = [r["costs"]["brelaz"]["median"] for r in ok if r["status"] in wanted]
            if group:
                add(f"{label}.median_cost", *median_with_ci(group), count=len(group))
        cens = sum(r["status"] == "censored" for r in ok)
        add("censored_runs", cens, censored=cens)
    if not point.complete:
        add("incomplete", 1)
    return point


# ---------------------------------------------------------------------------
# execution


def _point_dir(out: Path, series: Series, value: float) -> Path:
    return out / "points" / series.name / f"{value:g}"


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def run_point(config: ExperimentConfig, series: Series, value: float, out: Path | None = None,
              workers: int | None = None) -> SweepPoint:
    """Generate, solve and summarise one axis point, reusing persisted results."""
    samples = series.samples_at(value)
    pdir = _point_dir(out, series, value) if out is not None else None
    if pdir is not None and (pdir / "point.json").exists():
        saved = json.loads((pdir / "point.json").read_text())
        if saved.get("fingerprint") == config.fingerprint():
            return summarize_point(series, value, saved["records"], samples)
    started = time.perf_counter()
    records: list[dict] = []
    tasks = [(config, series, value, i) for i in range(samples)]
    workers = workers or _workers()
    # rare classes: stop at the first exhausted instance, batch by batch, so
    # the outcome does not depend on the worker count
    batch = max(1, workers) * 4
    for lo in range(0, len(tasks), batch):
        chunk = _map(tasks[lo:lo + batch], workers)
        records.extend(chunk)
        if any(r["failed"] for r in chunk):
            first = next(k for k, r in enumerate(records) if r["failed"])
            records = records[: first + 1]
            log.warning("%s at %g: generation exhausted after %d problems", series.name, value, first)
            break
    elapsed = time.perf_counter() - started
    if pdir is not None:
        (pdir / "instances").mkdir(parents=True, exist_ok=True)
        for r in records:
            if r["failed"]:
                continue
            if "problem" in r:
                (pdir / "instances" / f"{r['index']:05d}.csp").write_text(r["problem"])
            else:
                (pdir / "instances" / f"{r['index']:05d}.graph").write_text(r["graph"])
        slim = [{k: v for k, v in r.items() if k not in ("problem", "graph")} for r in records]
        (pdir / "point.json").write_text(_dump({"fingerprint": config.fingerprint(), "series": series.name,
                                                "axis": value, "records": slim}))
        (pdir / "timing.json").write_text(_dump({"seconds": round(elapsed, 3)}))
    return summarize_point(series, value, records, samples)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> list[SweepPoint]:
    """Run every point of every active series, then emit results if ``out_dir`` is set.

    Completed points found under ``out_dir`` with a matching configuration
    fingerprint are loaded instead of recomputed, so an interrupted run
    resumes where it stopped.
    """
    out = Path(config.out_dir) if config.out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(_dump(config.to_dict()))
    table = []
    for series in config.active_series():
        for value in series.axis:
            log.info("%s: %s = %g", config.preset, series.name, value)
            table.append(run_point(config, series, value, out, workers))
    if out is not None:
        emit_results(table, out, config)
    return table


# ---------------------------------------------------------------------------
# emission


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 10))
    return str(v)


def results_csv(table: Sequence[SweepPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for point in table:
        for row in point.rows:
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def results_json(table: Sequence[SweepPoint], config: ExperimentConfig | None = None) -> str:
    body = {
        "config": config.to_dict() if config is not None else None,
        "points": [
            {"series": p.series, "axis": p.axis, "complete": p.complete, "n_problems": p.n_problems,
             "attempts": p.attempts, "raw": f"points/{p.series}/{p.axis:g}/point.json", "rows": p.rows}
            for p in table
        ],
    }
    return _dump(body)


def emit_results(table: Sequence[SweepPoint], out: str | Path, config: ExperimentConfig | None = None,
                 formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write ``results.csv`` and/or ``results.json``; identical tables give identical bytes."""
    if not table:
        raise InputError("nothing to emit")
    out = Path(out)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            (out / "results.csv").write_text(results_csv(table))
            written.append(out / "results.csv")
        if "json" in formats:
            (out / "results.json").write_text(results_json(table, config))
            written.append(out / "results.json")
    except OSError as exc:
        raise OSError(f"cannot write results under {out}: {exc}") from exc
    return written


def load_point_records(path: str | Path) -> list[dict]:
    return json.loads(Path(path).read_text())["records"]


def reanalyze(out: str | Path) -> list[SweepPoint]:
    """Recompute summary rows from persisted raw records without re-solving."""
    out = Path(out)
    config = ExperimentConfig.from_dict(json.loads((out / "config.json").read_text()))
    table = []
    for series in config.active_series():
        for value in series.axis:
            path = _point_dir(out, series, value) / "point.json"
            if not path.exists():
                raise InputError(f"missing raw data {path}")
            table.append(summarize_point(series, value, load_point_records(path), series.samples_at(value)))
    return table


def read_instances(directory: str | Path) -> list[tuple[str, Problem]]:
    """``(id, problem)`` for every ``*.csp`` file, sorted by file name."""
    return [(p.stem, parse_problem(p.read_text())) for p in sorted(Path(directory).glob("*.csp"))]


def describe(table: Sequence[SweepPoint]) -> str:
    """Plain-text rendering of a result table."""
    lines = []
    for p in table:
        for r in p.rows:
            ci = "" if r["ci_lo"] is None else f"  [{r['ci_lo']:.4g}, {r['ci_hi']:.4g}]"
            lines.append(f"{r['statistic']:<48} axis={r['axis']:<6g} n={r['n_problems']:<5} {r['value']:.4g}{ci}")
    return "\n".join(lines)


def scale_is_valid(scale: float) -> bool:
    return math.isfinite(scale) and scale > 0
