"""``phase-lab`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime or generation exhaustion,
3 file I/O or format error. Diagnostics go to stderr; data goes to files
or stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from . import coloring as col
from . import harness
from .csp import count_solutions, read_problem
from .errors import FormatError, GenerationExhausted, InputError
from .generators import Predicate
from .mus import enumerate_mus
from .seeding import derive_seed
from .solvers import SOLVERS, RunProtocol, run_protocol
from .stats import median_with_ci

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

COST_COLUMNS = ["problem_id", "solver", "runs", "median_nodes", "mean_nodes", "min", "max", "censored_runs"]
MUS_COLUMNS = ["problem_id", "m", "mus_count", "smallest_size", "sizes"]
COLOR_COLUMNS = ["graph_id", "node_count", "gamma", "edges", "connected", "status", "search_nodes"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    return harness._fmt(float(x)) if not float(x).is_integer() else str(int(x))


def _problem_files(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.csp"))
        if not files:
            raise FileNotFoundError(f"no .csp files in {p}")
        return files
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    return [p]


def _manifest(path: str) -> dict | None:
    p = Path(path)
    m = (p if p.is_dir() else p.parent) / "manifest.json"
    return json.loads(m.read_text()) if m.exists() else None


def _series_from(args_or_spec, count: int, solvers=()) -> harness.Series:
    s = args_or_spec
    return harness.Series(
        name="cli", axis=(s["m"],), samples=count, n=s["n"], d=s["d"], method=s["method"],
        predicate=s["predicate"], solvers=tuple(solvers), runs=max(1, s.get("runs", 1)),
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    seed = _seed(args)
    spec = {"n": args.n, "d": args.d, "m": args.m, "method": args.method.replace("-", "_"),
            "predicate": str(Predicate.parse(args.predicate))}
    series = _series_from(spec, args.count)
    config = harness.ExperimentConfig("generate", (series,), base_seed=seed,
                                      max_attempts=args.max_attempts, max_swaps=args.max_swaps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    status = EXIT_OK
    for i in range(args.count):
        rec = harness.csp_instance(config, series, args.m, i)
        if rec["failed"]:
            print(f"generation exhausted at problem {i} after {rec['attempts']} attempts", file=sys.stderr)
            records.append({"index": i, "failed": True, "attempts": rec["attempts"]})
            status = EXIT_RUNTIME
            break
        (out / f"{i:05d}.csp").write_text(rec["problem"])
        records.append({"index": i, "file": f"{i:05d}.csp", "seed": rec["seed"], "attempts": rec["attempts"],
                        "swaps": rec["swaps"], "solutions": rec.get("solutions")})
    manifest = {"spec": spec, "base_seed": seed, "count": args.count, "max_attempts": args.max_attempts,
                "problems": records}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(f"wrote {sum(not r.get('failed') for r in records)} problems to {out}", file=sys.stderr)
    return status


def cmd_solve(args) -> int:
    seed = _seed(args)
    files = _problem_files(args.input)
    manifest = _manifest(args.input)
    rows, raw = [], []
    for k, path in enumerate(files):
        problem = read_problem(path)
        pid = path.stem
        index = int(pid) if pid.isdigit() else k
        if manifest is not None:
            # same derivation as the experiment harness, so costs line up
            series = _series_from(manifest["spec"], manifest["count"])
            base = harness.protocol_seed(seed, series, problem.m, args.solver)
        else:
            base = derive_seed(seed, harness._key(args.solver))
        pc = run_protocol(problem, args.solver, RunProtocol(args.runs, base, max_nodes=args.max_nodes), index)
        rows.append([pid, args.solver, args.runs, _num(pc.median), _num(pc.mean), min(pc.nodes), max(pc.nodes),
                     pc.censored])
        raw.append({"problem_id": pid, "m": problem.m, "nodes": list(pc.nodes), "censored": pc.censored})
    _write_text(_csv(COST_COLUMNS, rows), args.out)
    if args.out not in (None, "-"):
        Path(args.out).with_suffix(".raw.json").write_text(
            json.dumps({"solver": args.solver, "runs": args.runs, "base_seed": seed, "problems": raw},
                       indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_count(args) -> int:
    _seed(args)
    lines = []
    single = not Path(args.input).is_dir()
    for path in _problem_files(args.input):
        sc = count_solutions(read_problem(path), args.cap)
        text = f"{sc.count}{'+' if sc.capped else ''}"
        lines.append(text if single else f"{path.stem} {text}")
    _write_text("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_mus(args) -> int:
    _seed(args)
    files = _problem_files(args.input)
    rows, listing = [], []
    for path in files:
        problem = read_problem(path)
        report = enumerate_mus(problem)
        rows.append([path.stem, problem.m, report.count,
                     "" if report.smallest_size is None else report.smallest_size,
                     ";".join(map(str, report.sizes))])
        for subset in report.mus_list:
            listing.append(" ".join(map(str, subset)))
        listing.append(f"smallest_size: {report.smallest_size if report.count else 'none (solvable)'}")
    if len(files) == 1 and args.out is None:
        _write_text("\n".join(listing) + "\n", None)
    else:
        _write_text(_csv(MUS_COLUMNS, rows), args.out)
    return EXIT_OK


def cmd_color(args) -> int:
    seed = _seed(args)
    rows = []
    if args.input:
        graphs = [(p.stem, col.read_graph(p)) for p in
                  (sorted(Path(args.input).glob("*.graph")) if Path(args.input).is_dir() else [Path(args.input)])]
        runs = [(gid, g, derive_seed(seed, k)) for k, (gid, g) in enumerate(graphs)]
    else:
        if args.gamma is None:
            raise UsageError("--gamma is required unless --in is given")
        runs = []
        for k in range(args.samples):
            gseed = derive_seed(seed, k)
            runs.append((f"{k:05d}", col.random_graph(args.nodes, args.gamma, np.random.default_rng(gseed)), gseed))
    for gid, g, gseed in runs:
        out = col.brelaz_backtrack(g, derive_seed(gseed, 1), max_nodes=args.node_cap)
        rows.append([gid, g.node_count, _num(g.connectivity), len(g.edges), int(g.is_connected()), out.status,
                     out.nodes])
    _write_text(_csv(COLOR_COLUMNS, rows), args.out)
    if len(rows) > 1:
        f = sum(r[5] == "solution" for r in rows) / len(rows)
        print(f"colorable fraction {f:.3f} over {len(rows)} graphs", file=sys.stderr)
    return EXIT_OK


def cmd_experiment(args) -> int:
    seed = _seed(args)
    scale = 1.0 if args.paper_scale else args.scale
    if not harness.scale_is_valid(scale):
        raise UsageError("--scale must be positive")
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if "series" in data:
            data.setdefault("preset", "custom")
            config = harness.ExperimentConfig.from_dict(data)
        else:
            name = data.pop("preset")
            config = harness.preset(name, data.pop("scale", scale), data.pop("seed", seed), **data)
    elif args.preset:
        config = harness.preset(args.preset, scale, seed)
    else:
        raise UsageError("give --preset or --config")
    overrides = {"out_dir": args.out, "include_long": args.include_long or config.include_long}
    if args.max_attempts is not None:
        overrides["max_attempts"] = args.max_attempts
    config = harness.ExperimentConfig.from_dict({**config.to_dict(), **overrides})
    table = harness.run_experiment(config)
    if args.out is None:
        sys.stdout.write(harness.results_csv(table))
    incomplete = [f"{p.series}@{p.axis:g}" for p in table if not p.complete]
    if incomplete:
        print("incomplete points: " + ", ".join(incomplete), file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    _seed(args)
    src = Path(args.input)
    if src.is_dir():
        table = harness.reanalyze(src)
        text = harness.results_csv(table)
    else:
        raw_path = src.with_suffix(".raw.json")
        with src.open(newline="") as fh:
            reader = list(csv.DictReader(fh))
        if not reader or set(COST_COLUMNS) - set(reader[0]):
            raise FormatError(f"{src} is not a costs file with columns {', '.join(COST_COLUMNS)}")
        m_of = {}
        if raw_path.exists():
            m_of = {p["problem_id"]: p["m"] for p in json.loads(raw_path.read_text())["problems"]}
        groups: dict[tuple, list[dict]] = {}
        for r in reader:
            groups.setdefault((r["solver"], m_of.get(r["problem_id"], "")), []).append(r)
        rows = []
        for (solver, m), members in sorted(groups.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
            med, lo, hi = median_with_ci([float(r["median_nodes"]) for r in members])
            cens = sum(int(r["censored_runs"]) for r in members)
            rows.append([m, len(members), f"{solver}.median_cost", *map(harness._fmt, (med, lo, hi)), cens, ""])
        text = _csv(harness.CSV_COLUMNS, rows)
    _write_text(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phase-lab", description="Random CSP phase-transition experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_help):
        p.add_argument("--seed", type=int, default=None, help="base seed; a random one is printed if omitted")
        p.add_argument("--out", default=None, help=out_help)

    p = sub.add_parser("generate", help="generate problem instances")
    p.add_argument("--n", type=int, default=10, help="variables")
    p.add_argument("--d", type=int, default=3, help="domain size")
    p.add_argument("--m", type=int, required=True, help="nogoods per problem")
    p.add_argument("--method", default="generate-select",
                   choices=["generate-select", "hill-climb", "prespecified-solution", "homogeneous"])
    p.add_argument("--predicate", default="any",
                   help="any, solvable, unsolvable, exactly:K or at_least:K")
    p.add_argument("--count", type=int, default=1, help="number of problems")
    p.add_argument("--max-attempts", type=int, default=10**6, help="draw (or climb) budget per problem")
    p.add_argument("--max-swaps", type=int, default=10**4, help="swap budget per hill climb")
    common(p, "output directory for .csp files and manifest.json")
    p.set_defaults(func=cmd_generate, out_required=True)

    p = sub.add_parser("solve", help="run a backtracking solver repeatedly on problems")
    p.add_argument("--in", dest="input", required=True, help=".csp file or directory of them")
    p.add_argument("--solver", default="dynamic", choices=sorted(SOLVERS))
    p.add_argument("--runs", type=int, default=100, help="randomized runs per problem")
    p.add_argument("--max-nodes", type=int, default=None, help="node cap per run (runs over it are censored)")
    common(p, "costs CSV path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("count", help="exact solution count")
    p.add_argument("--in", dest="input", required=True, help=".csp file or directory of them")
    p.add_argument("--cap", type=int, default=None, help="stop counting at this many solutions")
    common(p, "output file (default stdout)")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("mus", help="minimal unsolvable variable subsets")
    p.add_argument("--in", dest="input", required=True, help=".csp file or directory of them")
    common(p, "MUS CSV path (default: listing for one file, CSV for a directory, on stdout)")
    p.set_defaults(func=cmd_mus)

    p = sub.add_parser("color", help="3-color random graphs with Brelaz backtracking")
    p.add_argument("--nodes", type=int, default=100, help="nodes per graph")
    p.add_argument("--gamma", type=float, default=None, help="connectivity 2|E|/|V|")
    p.add_argument("--samples", type=int, default=1, help="graphs to draw")
    p.add_argument("--in", dest="input", default=None, help="graph file or directory instead of drawing")
    p.add_argument("--node-cap", type=int, default=10**7, help="search node cap (censored beyond)")
    common(p, "coloring costs CSV path (default stdout)")
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("experiment", help="run a named preset or a JSON config")
    p.add_argument("--preset", choices=harness.PRESETS, default=None)
    p.add_argument("--config", default=None, help="JSON config: a preset name with overrides, or full series")
    p.add_argument("--scale", type=float, default=0.1, help="fraction of the full-scale sample counts")
    p.add_argument("--paper-scale", action="store_true", help="full-scale sample counts (same as --scale 1)")
    p.add_argument("--include-long", action="store_true", help="also run series tagged long-running")
    p.add_argument("--max-attempts", type=int, default=None, help="generation budget per problem")
    common(p, "results directory (default: summary CSV on stdout, nothing persisted)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("analyze", help="recompute summaries from persisted raw results")
    p.add_argument("--in", dest="input", required=True, help="experiment directory or costs CSV")
    common(p, "summary CSV path (default stdout)")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    if getattr(args, "out_required", False) and not args.out:
        parser.error(f"{args.command} needs --out")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"phase-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GenerationExhausted as exc:
        print(f"phase-lab: generation exhausted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FormatError, OSError) as exc:
        print(f"phase-lab: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InputError, ValueError) as exc:
        print(f"phase-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"phase-lab: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
