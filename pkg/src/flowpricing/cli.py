"""Command-line front end.

Every error exits nonzero with one line on stderr of the form
``flowpricing: error[<kind>]: <message>``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .control import ControllerConfig, edge_weights
from .dirichlet import TRIANGLE_EDGES, build_x, triangle_x
from .network import EnumerationLimitError, cuts, matrix_tree_count, spanning_trees
from .optimizer import (
    ConvergenceError,
    check_cut_feasibility,
    check_spanning_tree_infinite,
    cut_inflow,
    default_epsilon,
    solve_static,
)
from .scenario import Scenario, ScenarioError, load_scenario
from .sim import fit_decay_rate, initial_prices, run_closed_loop

PROG = "flowpricing"


class CLIError(Exception):
    def __init__(self, kind: str, message: str, code: int = 2):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("time grid must be START:STOP:COUNT")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time grid {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Optimal pricing control for distribution networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for randomised draws")

    sim = sub.add_parser("simulate", parents=[common], help="closed-loop simulation to CSV")
    sim.add_argument("scenarios", nargs="+", help="scenario file(s) or bundled names")
    sim.add_argument("--t-end", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--gain", type=float)
    sim.add_argument("--controller", choices=("feedforward", "feedback"))
    sim.add_argument("--init", choices=("zeros", "optimal"))
    sim.add_argument("--record-every", type=float)
    sim.add_argument("--output", type=Path, help="output directory")

    st = sub.add_parser("solve-static", parents=[common], help="static optimal flows and prices")
    st.add_argument("scenario")
    which = st.add_mutually_exclusive_group()
    which.add_argument("--time", type=float, help="use the scenario supply at this time (default 0)")
    which.add_argument("--supply", type=_vector, help="explicit node supply p1,...,pn")
    st.add_argument("--tol", type=float, default=1e-9)

    fe = sub.add_parser("check-feasibility", parents=[common], help="cut and unbounded-tree conditions")
    fe.add_argument("scenario")
    fe.add_argument("--epsilon", type=float)
    fe.add_argument("--time-grid", type=_grid, help="START:STOP:COUNT (default 0:t_end:1001)")

    tr = sub.add_parser("trees", parents=[common], help="spanning trees and the tree matrix X")
    tr.add_argument("scenario")
    tr.add_argument("--zeta", type=_vector, help="node prices at which to weight the trees (default 0)")
    return parser


def _load(name: str) -> Scenario:
    try:
        return load_scenario(name)
    except FileNotFoundError as exc:
        raise CLIError("missing", str(exc)) from None
    except ScenarioError as exc:
        raise CLIError("scenario", str(exc)) from None


def _fmt(v) -> str:
    return np.array2string(np.asarray(v, dtype=float), precision=10, separator=", ", max_line_width=200)


def cmd_simulate(args) -> int:
    for name in args.scenarios:
        sc = _load(name)
        kind = args.controller or sc.controller.kind
        init = args.init or sc.controller.init
        gain = args.gain if args.gain is not None else sc.controller.gain
        cfg = ControllerConfig(gain=gain, mean_pin=sc.controller.mean_pin)
        t_end = args.t_end if args.t_end is not None else sc.sim.t_end
        dt = args.dt if args.dt is not None else sc.sim.dt
        record_every = args.record_every if args.record_every is not None else sc.sim.record_every
        out_dir = args.output or Path(sc.outputs.get("dir", "."))
        try:
            zeta0 = initial_prices(sc.network, sc.costs, sc.exo, init, cfg)
            traj = run_closed_loop(
                sc.network, sc.costs, sc.exo, cfg, sc.sim.x0, zeta0, t_end, dt, record_every, controller=kind
            )
        except ConvergenceError as exc:
            raise CLIError("solver", str(exc)) from None
        except ValueError as exc:
            raise CLIError("config", str(exc)) from None
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{sc.name}.csv"
        traj.to_csv(csv_path)
        summary = {
            "scenario": sc.name,
            "controller": kind,
            "init": init,
            "gain": gain,
            "dt": dt,
            "t_end": t_end,
            "record_every": record_every,
            "reset_times_snapped": traj.metadata["reset_times"],
            "final_balancing_residual": float(traj.bal_res[-1]),
            "final_optimality_gap": float(traj.opt_gap[-1]),
            "max_optimality_gap": float(np.nanmax(traj.opt_gap)),
            "decay_rate_fit": fit_decay_rate(traj),
            "samples": len(traj),
            "seed": args.seed,
        }
        (out_dir / f"{sc.name}.meta.json").write_text(json.dumps(summary, indent=2) + "\n")
        print(f"[{sc.name}] wrote {csv_path} ({len(traj)} samples)")
        print(f"  final |B^T x|_inf       = {summary['final_balancing_residual']:.3e}")
        print(f"  final |lam - lam_opt|   = {summary['final_optimality_gap']:.3e}")
        print(f"  fitted decay rate of U  = {summary['decay_rate_fit']:.4f}")
    return 0


def cmd_solve_static(args) -> int:
    sc = _load(args.scenario)
    if args.supply is not None:
        p = args.supply
    else:
        p = sc.exo.closed_form_output(args.time or 0.0)
    try:
        sol = solve_static(sc.network, sc.costs, p, tol=args.tol)
    except ConvergenceError as exc:
        raise CLIError("solver", str(exc)) from None
    except ValueError as exc:
        raise CLIError("supply", str(exc)) from None
    print(f"supply p       = {_fmt(p)}")
    print(f"flow lambda    = {_fmt(sol.flow)}")
    print(f"prices zeta    = {_fmt(sol.prices)}")
    print(f"kkt residual   = {sol.kkt_residual:.3e}")
    print(f"primal value   = {sol.primal_value:.12g}")
    print(f"dual value     = {sol.dual_value:.12g}  (minimised conjugate objective; equals -primal at optimum)")
    print(f"duality gap    = {sol.dual_gap:.3e}")
    return 0


def _label(node_set) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(node_set)) + "}"


def cmd_check_feasibility(args) -> int:
    sc = _load(args.scenario)
    net = sc.network
    eps = args.epsilon if args.epsilon is not None else default_epsilon(net)
    start, stop, count = args.time_grid or (0.0, sc.sim.t_end, 1001)
    times = np.linspace(start, stop, count)
    try:
        all_cuts = cuts(net)
    except EnumerationLimitError as exc:
        raise CLIError("limit", str(exc)) from None
    worst = {c.node_set: (math.inf, None) for c in all_cuts}
    for t in times:
        report = check_cut_feasibility(net, sc.exo.closed_form_output(t), eps)
        for s, margin in report.margins.items():
            if margin < worst[s][0]:
                worst[s] = (margin, t)
    # margin is the slack in the cut condition: capacity - epsilon - |inflow| >= 0
    print(f"cut margins (capacity - epsilon - |inflow|) over {count} times in [{start}, {stop}], epsilon = {eps:.3g}")
    for c in all_cuts:
        slack, t = worst[c.node_set]
        where = "" if t is None else f" at t = {t:.6g}"
        print(f"  S = {_label(c.node_set):<12} capacity = {c.capacity:<10.6g} worst margin = {slack - eps:.6g}{where}")
    tight = min(all_cuts, key=lambda c: worst[c.node_set][0])
    tight_margin = worst[tight.node_set][0] - eps
    status = "PASS" if tight_margin >= 0 else "FAIL"
    print(f"cut condition (inflow below capacity by epsilon): {status}; tightest S = {_label(tight.node_set)}, margin = {tight_margin:.6g}")
    tree_ok = check_spanning_tree_infinite(net)
    print(f"unbounded spanning tree (every cut infinite): {'PASS' if tree_ok else 'FAIL'}")
    return 0


def cmd_trees(args) -> int:
    sc = _load(args.scenario)
    net = sc.network
    try:
        trees = spanning_trees(net)
    except EnumerationLimitError as exc:
        raise CLIError("limit", str(exc)) from None
    print(f"spanning trees: {len(trees)} (matrix-tree count {matrix_tree_count(net)})")
    for tree in trees:
        print("  {" + ", ".join(str(k + 1) for k in tree) + "}")
    if args.zeta is not None:
        zeta = args.zeta
    elif args.seed is not None:
        zeta = np.random.default_rng(args.seed).normal(size=net.node_count)
    else:
        zeta = np.zeros(net.node_count)
    if zeta.shape != (net.node_count,):
        raise CLIError("config", f"--zeta needs {net.node_count} values")
    h = edge_weights(net, sc.costs, zeta)
    X = build_x(net, h, fast_path=False)
    print(f"prices zeta = {_fmt(zeta)}")
    print(f"edge weights h = {_fmt(h)}")
    print(f"tree weight sum hbar = {X.tree_weight_sum:.12g}")
    print("X =")
    for row in X.entries:
        print("  " + _fmt(row))
    if net.edges == TRIANGLE_EDGES:
        diff = np.abs(X.entries - triangle_x(h).entries).max()
        print(f"closed-form triangle X agreement: max |diff| = {diff:.3e}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "solve-static": cmd_solve_static,
    "check-feasibility": cmd_check_feasibility,
    "trees": cmd_trees,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"{PROG}: error[{exc.kind}]: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
