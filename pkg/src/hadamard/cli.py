"""Batch command line: ``hadamard {mean,median,feasibility,lln,flow,verify,geodesic}``.

Exit codes: 0 on success; 1 when ``verify`` finds a check outside its
tolerance; 2 on bad input (unreadable or malformed files, invalid flags,
guard violations); 3 when a run exhausted its budget without meeting an
explicitly requested ``--tol`` (the last iterate is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import oracles
from .algorithms import (
    DEFAULT_BUDGET,
    frechet_mean,
    geometric_median,
    lie_trotter_kato,
    lln_mean,
    ppa_cyclic,
    ppa_random,
    variance_gap,
)
from .core import GeodesicBall, InvalidInputError
from .files import atomic_write, check_weights, dump_json, parse_point_arg, parse_weights, read_points, read_trees
from .prox import GENERATOR, AnchorConfiguration, Indicator, RunConfig, StepSchedule, objective_value
from .spaces import Euclidean, Spider

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

ALGO_HELP = (
    "cyclic: resolvents applied in fixed order, one step size per cycle; "
    "random: each step picks a point UNIFORMLY and the weights enter the step coefficient "
    "2*lam*w/(1+2*lam*w); "
    "lln (mean only): inductive mean, each step samples a point WITH PROBABILITY w_n and "
    "moves 1/(k+1) of the way toward it, so the weights enter the sampling, not the coefficient"
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_input(p, trees=True):
    p.add_argument("--space", help="space descriptor: euclidean:D, spider:K, spd:N, or bhv[:N] for trees")
    p.add_argument("--points", help="JSON points file {space, points, weights?}")
    if trees:
        p.add_argument("--trees", help="file with one rooted Newick tree per line")
    p.add_argument("--weights", help="comma-separated weights or a JSON file; default uniform")


def _add_run(p, algos, default_algo="cyclic"):
    p.add_argument("--algo", choices=algos, default=default_algo, help=ALGO_HELP)
    p.add_argument("--cycles", type=int, help=f"cycle budget for --algo cyclic (default {DEFAULT_BUDGET['cyclic']})")
    p.add_argument("--steps", type=int,
                   help=f"step budget for random/lln (default {DEFAULT_BUDGET['random']} / {DEFAULT_BUDGET['lln']})")
    p.add_argument("--lambda-c", type=float, default=1.0, dest="lambda_c",
                   help="C in the step sizes lambda_k = C/(k+1) (default 1); for medians use about the data diameter")
    p.add_argument("--tol", type=float,
                   help="stop once the path length moved over a window that visits every component "
                        "is at most TOL; "
                        "if the budget runs out first the exit code is 3")
    p.add_argument("--seed", type=int, default=0, help="seed for random/lln runs (default 0)")
    p.add_argument("--record-every", type=int, default=1, dest="record_every",
                   help="keep every n-th step in the trace (default 1)")


def _add_output(p):
    p.add_argument("--out", help="write the result document (JSON) here")
    p.add_argument("--trace", help="write the iteration trace (CSV) here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hadamard", description="Means, medians and proximal splitting in Hadamard spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mean", help="weighted Frechet mean")
    _add_input(p)
    _add_run(p, ["cyclic", "random", "lln"])
    _add_output(p)

    p = sub.add_parser("median", help="weighted geometric median")
    _add_input(p)
    _add_run(p, ["cyclic", "random"])
    _add_output(p)

    p = sub.add_parser("lln", help="law-of-large-numbers (inductive) mean; anchors sampled by weight")
    _add_input(p)
    p.add_argument("--steps", type=int, default=DEFAULT_BUDGET["lln"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float,
                   help="stop once the path length moved over a window that visits every component is at most TOL")
    p.add_argument("--record-every", type=int, default=1, dest="record_every")
    _add_output(p)

    p = sub.add_parser("feasibility", help="cyclic or random projections onto closed balls")
    p.add_argument("--space", required=True, help="space descriptor, e.g. euclidean:2")
    p.add_argument("--center", action="append", required=True,
                   help="ball center as a JSON point encoding (or comma list); repeat once per ball")
    p.add_argument("--radius", action="append", type=float, required=True,
                   help="ball radius; repeat once per ball, in the order of --center")
    p.add_argument("--start", help="starting point (default: the first center)")
    p.add_argument("--algo", choices=["cyclic", "random"], default="cyclic",
                   help="cyclic: project onto the balls in order; random: pick a ball uniformly each step")
    p.add_argument("--cycles", type=int, default=200, help="cycle budget (default 200)")
    p.add_argument("--steps", type=int, help="step budget for --algo random (default 200 per ball)")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="feasibility tolerance on the distance to every ball (default 1e-6)")
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("flow", help="Lie-Trotter-Kato approximation of the gradient flow")
    _add_input(p)
    p.add_argument("--objective", choices=["mean", "median"], default="mean",
                   help="flow of sum w d(.,a)^2 (mean) or sum w d(.,a) (median)")
    p.add_argument("--t", type=float, required=True, help="flow time t >= 0")
    p.add_argument("--k", type=int, required=True, help="number of resolvent cycles, each with lambda = t/k")
    p.add_argument("--start", help="starting point (default: the first point)")
    _add_output(p)

    p = sub.add_parser("verify", help="check solver output against independent oracles")
    _add_input(p)
    _add_run(p, ["cyclic", "random", "lln"])
    p.add_argument("--replicates", type=int, default=200,
                   help="seeds for the LLN rate check with --algo lln (default 200)")
    p.add_argument("--out", help="write the oracle report (JSON) here")

    p = sub.add_parser("geodesic", help="point at parameter t on the geodesic between two inputs")
    _add_input(p, trees=True)
    p.add_argument("--t", type=float, required=True, help="geodesic parameter in [0, 1]")
    p.add_argument("--out", help="write the result document (JSON) here")
    return parser


# ---------------------------------------------------------------- helpers


def _load(args):
    points_arg = getattr(args, "points", None)
    trees_arg = getattr(args, "trees", None)
    if bool(points_arg) == bool(trees_arg):
        raise InvalidInputError("give exactly one of --points or --trees")
    if trees_arg:
        space, pts = read_trees(trees_arg, args.space)
        weights = None
    else:
        space, pts, weights = read_points(points_arg, args.space)
        if weights is not None:
            if not isinstance(weights, list):
                raise InvalidInputError("'weights' in the points file must be an array")
            check_weights(weights, len(pts))
    if args.weights:
        weights = parse_weights(args.weights, len(pts))
    data = AnchorConfiguration(pts, weights) if weights is not None else AnchorConfiguration.uniform(pts)
    return space, data


def _config(args, variant):
    budget = args.cycles if variant == "cyclic" else args.steps
    if budget is None:
        budget = DEFAULT_BUDGET[variant]
    tol = 0.0 if args.tol is None else args.tol
    return RunConfig(budget=budget, tol=tol, seed=args.seed, schedule=StepSchedule(args.lambda_c),
                     record_every=args.record_every)


def _result(space, point, objective, trace, seed, schedule):
    doc = {
        "space": space.descriptor,
        "point": space.encode(point),
        "objective": objective,
        "iterations": int(trace.steps_taken),
        "stop_reason": trace.stop_reason,
        "seed": seed,
        "schedule": schedule,
        "generator": GENERATOR,
        "variant": trace.metadata.get("variant"),
    }
    return doc


def _emit(args, space, doc, trace=None):
    if getattr(args, "out", None):
        atomic_write(args.out, dump_json(doc))
    if trace is not None and getattr(args, "trace", None):
        atomic_write(args.trace, trace.to_csv())
    print(json.dumps(doc["point"]))
    if "objective" in doc:
        print(f"objective: {doc['objective']!r}")


def _budget_exit(args, trace):
    if args.tol is not None and trace.stop_reason == "budget":
        print(f"warning: budget exhausted before the iterate settled to --tol {args.tol:g}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


# ---------------------------------------------------------------- commands


def cmd_mean(args):
    space, data = _load(args)
    cfg = _config(args, args.algo)
    point, trace = frechet_mean(space, data, args.algo, cfg)
    objective = objective_value(space, data.mean_components(), point)
    schedule = None if args.algo == "lln" else cfg.schedule.to_dict()
    seed = None if args.algo == "cyclic" else args.seed
    _emit(args, space, _result(space, point, objective, trace, seed, schedule), trace)
    return _budget_exit(args, trace)


def cmd_median(args):
    space, data = _load(args)
    cfg = _config(args, args.algo)
    point, trace = geometric_median(space, data, args.algo, cfg)
    objective = objective_value(space, data.median_components(), point)
    seed = None if args.algo == "cyclic" else args.seed
    _emit(args, space, _result(space, point, objective, trace, seed, cfg.schedule.to_dict()), trace)
    return _budget_exit(args, trace)


def cmd_lln(args):
    space, data = _load(args)
    point, trace = lln_mean(space, data, args.seed, args.steps, tol=args.tol, record_every=args.record_every)
    objective = objective_value(space, data.mean_components(), point)
    _emit(args, space, _result(space, point, objective, trace, args.seed, None), trace)
    return _budget_exit(args, trace)


def cmd_feasibility(args):
    from .spaces import parse_space

    space = parse_space(args.space)
    if len(args.center) != len(args.radius):
        raise InvalidInputError(f"{len(args.center)} --center values for {len(args.radius)} --radius values")
    balls = [GeodesicBall(parse_point_arg(space, c), r) for c, r in zip(args.center, args.radius)]
    for b in balls:
        space.validate(b.center)
    x0 = parse_point_arg(space, args.start) if args.start else balls[0].center
    comps = [Indicator(b) for b in balls]

    def residual(x):
        return float(sum(b.distance_to(space, x) for b in balls))

    # movement below tol over a window and a residual below tol are checked separately
    cfg_tol = 0.0
    if args.algo == "cyclic":
        cfg = RunConfig(budget=args.cycles, tol=cfg_tol)
        trace = ppa_cyclic(space, comps, x0, cfg, objective=residual)
    else:
        steps = args.steps if args.steps is not None else 200 * len(balls)
        cfg = RunConfig(budget=steps, tol=cfg_tol, seed=args.seed)
        trace = ppa_random(space, comps, x0, cfg, objective=residual)
    point = trace.final
    worst = max(b.distance_to(space, point) for b in balls)
    doc = _result(space, point, residual(point), trace, None if args.algo == "cyclic" else args.seed, None)
    doc["max_set_distance"] = worst
    doc["feasible"] = bool(worst <= args.tol)
    _emit(args, space, doc, trace)
    if worst > args.tol:
        print(f"warning: not within {args.tol:g} of every ball after the budget", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_flow(args):
    space, data = _load(args)
    comps = data.mean_components() if args.objective == "mean" else data.median_components()
    x0 = parse_point_arg(space, args.start) if args.start else data.anchors[0]
    point = lie_trotter_kato(space, comps, x0, args.t, args.k)
    doc = {
        "space": space.descriptor,
        "point": space.encode(point),
        "objective": objective_value(space, comps, point),
        "t": args.t,
        "k": args.k,
        "iterations": args.k * len(comps),
    }
    _emit(args, space, doc)
    return EXIT_OK


def cmd_geodesic(args):
    space, data = _load(args)
    if len(data) != 2:
        raise InvalidInputError(f"geodesic needs exactly two inputs, got {len(data)}")
    p, q = data.anchors
    point = space.geodesic(p, q, args.t)
    doc = {"space": space.descriptor, "point": space.encode(point), "t": args.t, "distance": space.distance(p, q)}
    if args.out:
        atomic_write(args.out, dump_json(doc))
    print(json.dumps(doc["point"]))
    return EXIT_OK


def cmd_verify(args):
    space, data = _load(args)
    reports = []
    if args.algo == "lln":
        if not isinstance(space, (Euclidean, Spider)):
            raise InvalidInputError("the LLN rate check needs a Euclidean or spider input")
        reports.append(oracles.lln_rate_report(space, data, range(args.replicates), [10, 100, 1000]))
    else:
        cfg = _config(args, args.algo)
        mean, _ = frechet_mean(space, data, args.algo, cfg)
        median, _ = geometric_median(space, data, args.algo, cfg)
        f_mean = objective_value(space, data.mean_components(), mean)
        f_median = objective_value(space, data.median_components(), median)
        rep = oracles.OracleReport(f"{space.descriptor}, N={len(data)}, {args.algo}")
        if isinstance(space, Euclidean):
            ref = oracles.euclidean_mean_closed_form(data)
            rep.add("mean point (max coordinate gap)", space.encode(ref), space.encode(mean), 1e-3,
                    abs_gap=float(np.max(np.abs(ref.coords - mean.coords))))
            wm = oracles.weiszfeld_median(data)
            rep.add("median objective", objective_value(space, data.median_components(), wm), f_median, 1e-3)
        elif isinstance(space, Spider):
            ref, f_ref = oracles.spider_1d_search(data, space.ray_count, power=2)
            rep.add("mean distance to 1-D search", 0.0, space.distance(ref, mean), 1e-2)
            rep.add("mean objective", f_ref, f_mean, 1e-3)
            _, f_med = oracles.spider_1d_search(data, space.ray_count, power=1)
            rep.add("median objective", f_med, f_median, 1e-3)
        # the variance inequality holds at the true mean in every backend
        pts = list(data.anchors) + [median]
        scale = max(space.distance(a, b) for a in pts for b in pts) or 1.0
        worst = min(variance_gap(space, data, mean, z) for z in pts)
        rep.add("variance inequality (min gap / scale^2)", 0.0, worst / scale**2, 1e-3,
                abs_gap=max(0.0, -worst / scale**2))
        reports.append(rep)
    text = "\n".join(r.to_text() for r in reports)
    print(text)
    passed = all(r.passed for r in reports)
    if args.out:
        atomic_write(args.out, dump_json({"passed": passed, "reports": [r.to_dict() for r in reports]}))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


COMMANDS = {
    "mean": cmd_mean,
    "median": cmd_median,
    "lln": cmd_lln,
    "feasibility": cmd_feasibility,
    "flow": cmd_flow,
    "verify": cmd_verify,
    "geodesic": cmd_geodesic,
}


def run(argv=None) -> int:
    """Parse ``argv`` and run one command; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (InvalidInputError, ValueError) as exc:
        print(f"hadamard {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"hadamard {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
