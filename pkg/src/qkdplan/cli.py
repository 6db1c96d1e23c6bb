"""Command-line front end: ``qkdplan <command> [options]``.

Every command writes its artifacts into the output directory (``--out``,
overridden by ``QKDPLAN_OUT``): solution.json, report.json, report.csv,
solution.dot and PNG figures.  Exit codes: 0 ok, 1 invalid input,
2 infeasible plan, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import zlib
from pathlib import Path as FilePath

import numpy as np

from .baseline import SaConfig, run_sa
from .evaluation import EvaluationError, HeuristicError, circle_heuristic, evaluate_solution
from .graphs import GraphError, is_two_edge_connected
from .hqa import DEFAULT_MAX_LEN, DEFAULT_RESTARTS, PlanningError, run_hqa
from .network import Network, NetworkError, export_graph, load_network, reference_network
from .qubo import AnnealSchedule, SolverError, make_solver
from .redundancy import run_redundancy
from .solution import PlanSolution, load_solution

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 1, 2, 3


def substream(seed: int, name: str) -> int:
    """Independent integer seed for a named component of one run."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(zlib.crc32(name.encode()),))
    return int(ss.generate_state(1)[0])


# argument handling --------------------------------------------------------

def _network_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--input", type=FilePath, help="network file (JSON or CSV triples)")
    src.add_argument("--reference", action="store_true", help="use the synthetic reference network")
    p.add_argument("--format", choices=["json", "csv-triple"], default=None,
                   help="input format (default: from the file suffix)")
    p.add_argument("--traffic", type=FilePath, help="traffic CSV for csv-triple input")


def _common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="run seed (also the reference network seed)")
    p.add_argument("--out", type=FilePath, default=FilePath("out"), help="output directory")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")


def _planner_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--start", default="6", help="start node (default 6)")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN, help="maximum path length in edges")
    p.add_argument("--solver", choices=["sa", "exhaustive", "milp"], default="sa", help="QUBO backend")
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS, help="sampler restarts per QUBO")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdplan", description="QKD network planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan-nn", help="N:N plan with the hybrid QUBO planner")
    _network_args(p)
    _planner_args(p)
    _common_args(p)

    p = sub.add_parser("plan-redundant", help="bridge-free circle-redundant plan")
    _network_args(p)
    _planner_args(p)
    _common_args(p)
    p.add_argument("--base", type=FilePath, help="N:N solution.json to extend (default: plan one)")
    p.add_argument("--max-rounds", type=int, default=10, help="bridge workaround rounds")

    p = sub.add_parser("baseline-sa", help="simulated-annealing baseline on edge subsets")
    _network_args(p)
    _common_args(p)
    p.add_argument("--runs", type=int, default=1, help="independent seeded runs")
    p.add_argument("--redundant", action="store_true", help="require 2-edge-connected candidates")
    p.add_argument("--restarts", type=int, default=SaConfig.restarts, help="restarts per run")

    p = sub.add_parser("evaluate", help="metrics and loads of an existing solution")
    _network_args(p, required=False)
    _common_args(p)
    p.add_argument("--solution", type=FilePath, required=True, help="solution.json to evaluate")
    p.add_argument("--failure", action="store_true", help="add the single-failure sweep")

    p = sub.add_parser("heuristic", help="MST plus biggest circles around its satellites")
    _network_args(p)
    _common_args(p)
    p.add_argument("--start", default="6", help="central node (default 6)")
    return parser


def _load(args) -> Network | None:
    if getattr(args, "reference", False):
        return reference_network(args.seed)
    if getattr(args, "input", None) is None:
        return None
    fmt = args.format or ("json" if args.input.suffix.lower() == ".json" else "csv-triple")
    return load_network(args.input, fmt, args.traffic)


def _out_dir(args) -> FilePath:
    out = FilePath(os.environ.get("QKDPLAN_OUT") or args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solver(args, stream: int):
    if args.solver == "sa":
        return make_solver("sa", schedule=AnnealSchedule(restarts=args.restarts), seed=stream)
    return make_solver(args.solver)


# output ------------------------------------------------------------------

def _write_solution(out: FilePath, sol: PlanSolution, failures: bool, plots: bool, title: str) -> dict:
    net = sol.network
    report = evaluate_solution(net, sol.edges, failures)
    sol.save(out / "solution.json")
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv(net))
    (out / "solution.dot").write_bytes(export_graph(net, sol.edges, "dot"))
    if plots:
        from .plotting import plot_loads, plot_network

        plot_network(net, sol.edges, out / "network.png", title=title)
        plot_loads(report.load, out / "load.png", report.failure_load, title=f"{title}: load")
    summary = {
        "method": sol.method,
        "edges": len(sol.edges),
        "edge_improvement_pct": sol.edge_improvement,
        "min_key_rate_kbps": sol.min_key_rate,
        "max_load_pct": round(report.max_load, 2),
    }
    print(" ".join(f"{k}={v}" for k, v in summary.items()))
    return summary


# commands ----------------------------------------------------------------

def cmd_plan_nn(args) -> int:
    net = _load(args)
    stream = substream(args.seed, "planner")
    sol = run_hqa(net, args.start, args.max_len, _solver(args, substream(args.seed, "sampler")), stream)
    _write_solution(_out_dir(args), sol, False, not args.no_plots, "N:N plan")
    return EXIT_OK


def cmd_plan_redundant(args) -> int:
    net = _load(args)
    solver = _solver(args, substream(args.seed, "sampler"))
    if args.base is not None:
        base = load_solution(args.base, net).edges
    else:
        base = run_hqa(net, args.start, args.max_len, solver, substream(args.seed, "planner")).edges
    sol = run_redundancy(net, base, solver, substream(args.seed, "redundancy"), args.max_rounds, args.max_len)
    _write_solution(_out_dir(args), sol, True, not args.no_plots, "redundant plan")
    return EXIT_OK


def cmd_baseline_sa(args) -> int:
    net = _load(args)
    out = _out_dir(args)
    if args.runs < 1:
        raise ValueError("--runs must be positive")
    base = np.random.SeedSequence(substream(args.seed, "baseline"))
    seeds = [int(s.generate_state(1)[0]) for s in base.spawn(args.runs)]
    sols = []
    runs_dir = out / "runs"
    if args.runs > 1:
        runs_dir.mkdir(exist_ok=True)
    for k, s in enumerate(seeds):
        sol = run_sa(net, SaConfig(redundancy_mode=args.redundant, seed=s, restarts=args.restarts))
        sols.append(sol)
        if args.runs > 1:
            sol.save(runs_dir / f"run_{k:03d}.json")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["run", "seed", "edges", "edge_improvement_pct", "min_key_rate_kbps", "energy"])
    for k, (s, sol) in enumerate(zip(seeds, sols)):
        writer.writerow([k, s, len(sol.edges), f"{sol.edge_improvement:.2f}", f"{sol.min_key_rate:g}",
                         f"{sol.provenance['energy']:.6f}"])
    (out / "runs.csv").write_text(buf.getvalue())
    best = min(range(len(sols)), key=lambda k: (len(sols[k].edges), sols[k].provenance["energy"], k))
    summary = _write_solution(out, sols[best], args.redundant, not args.no_plots, "SA baseline")
    improvements = [s.edge_improvement for s in sols]
    stats = {
        "runs": args.runs,
        "best_run": best,
        "best_edge_improvement_pct": summary["edge_improvement_pct"],
        "mean_edge_improvement_pct": round(float(np.mean(improvements)), 2),
    }
    (out / "runs.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    if not args.no_plots:
        from .plotting import plot_improvements

        plot_improvements({"SA": improvements}, out / "improvement.png",
                          title=f"edge improvement over {args.runs} runs")
    print(f"runs={args.runs} mean_edge_improvement_pct={stats['mean_edge_improvement_pct']}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    sol = load_solution(args.solution, _load(args))
    if args.failure and not is_two_edge_connected(sol.edges, sol.network.node_ids):
        raise EvaluationError("failure analysis needs a 2-edge-connected solution")
    _write_solution(_out_dir(args), sol, args.failure, not args.no_plots, f"{sol.method} evaluation")
    return EXIT_OK


def cmd_heuristic(args) -> int:
    net = _load(args)
    sol = circle_heuristic(net, args.start)
    _write_solution(_out_dir(args), sol, True, not args.no_plots, "circle heuristic")
    return EXIT_OK


COMMANDS = {
    "plan-nn": cmd_plan_nn,
    "plan-redundant": cmd_plan_redundant,
    "baseline-sa": cmd_baseline_sa,
    "evaluate": cmd_evaluate,
    "heuristic": cmd_heuristic,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SolverError as exc:
        print(f"qkdplan: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (PlanningError, HeuristicError) as exc:
        print(f"qkdplan: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NetworkError, GraphError, EvaluationError, ValueError, OSError) as exc:
        print(f"qkdplan: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
