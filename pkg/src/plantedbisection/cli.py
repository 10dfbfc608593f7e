"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 infeasible cell
(enumeration too large, or an experiment skipped a grid cell).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .bounds import DEFAULT_C, bound_report
from .exceptions import EnumerationTooLargeError, PlantedBisectionError
from .graphmodel import (
    DEFAULT_ENUMERATION_CAP,
    ClassAssignment,
    ModelParams,
    sample_assignment,
    sample_graph,
)
from .harness import load_config, run_experiment
from .io import (
    read_graph,
    write_assignment,
    write_graph,
    write_posterior_csv,
    write_report_json,
    write_samples_csv,
)
from .posterior import ChainConfig, exact_posterior, mh_sampler
from .uncertainty import enlarge, minimal_diameter_credible, minimal_order_credible

OUTPUT_DIR_ENV = "PLANTEDBISECTION_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _add_model_args(p):
    p.add_argument("--p", type=float, required=True, help="within-class edge probability")
    p.add_argument("--q", type=float, required=True, help="between-class edge probability")


def _add_chain_args(p):
    d = ChainConfig()
    p.add_argument("--engine", choices=("exact", "mcmc"), default="exact")
    p.add_argument("--steps", type=int, default=d.steps)
    p.add_argument("--burn-in", type=int, default=d.burn_in)
    p.add_argument("--thin", type=int, default=d.thin)
    p.add_argument("--chains", type=int, default=d.chains)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP,
                   help="largest |Theta_n| enumerated by the exact engine")


def _chain_config(args):
    return ChainConfig(steps=args.steps, burn_in=args.burn_in, thin=args.thin,
                       seed=args.seed, chains=args.chains)


def _posterior_table(args, graph, params):
    if args.engine == "exact":
        return exact_posterior(graph, params, args.cap)
    return mh_sampler(graph, params, _chain_config(args)).to_table()


def cmd_generate(args):
    params = ModelParams(args.n, args.p, args.q)
    if args.theta0 is not None:
        theta0 = ClassAssignment.from_string(args.theta0)
        if theta0.n != args.n:
            raise PlantedBisectionError(f"--theta0 has n={theta0.n}, expected {args.n}")
    else:
        theta0 = sample_assignment(args.n, args.seed)
    graph = sample_graph(params, theta0, args.seed)
    write_graph(graph, args.output)
    if args.theta_output:
        write_assignment(theta0, args.theta_output)
    return EXIT_OK


def cmd_posterior(args):
    graph = read_graph(args.graph)
    params = ModelParams(graph.n, args.p, args.q)
    if args.engine == "exact":
        write_posterior_csv(exact_posterior(graph, params, args.cap), args.output)
    else:
        samples = mh_sampler(graph, params, _chain_config(args))
        write_samples_csv(samples, args.output)
    return EXIT_OK


def cmd_credible(args):
    graph = read_graph(args.graph)
    params = ModelParams(graph.n, args.p, args.q)
    table = _posterior_table(args, graph, params)
    if args.construction == "minimal-order":
        cred = minimal_order_credible(table, args.level)
    else:
        cred = minimal_diameter_credible(table, args.level)
    universe = table.bits if args.engine == "mcmc" else None
    report = enlarge(cred, args.kn, universe)
    if args.output:
        write_report_json(report, args.output)
    else:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_bounds(args):
    rep = bound_report(args.n, args.p, args.q, k_n=args.kn, C=args.C, delta=args.delta, A=args.A)
    print(json.dumps(rep, indent=2))
    return EXIT_OK


def cmd_experiment(args):
    cfg = load_config(args.config)
    if args.fixed_theta0 is not None:
        cfg = replace(cfg, fixed_theta0=args.fixed_theta0)
    out = args.output_dir or cfg.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "results"
    result = run_experiment(cfg, Path(out))
    for cell in result.skipped:
        print(f"skipped n={cell['n']} p={cell['p']} q={cell['q']}: {cell['reason']}",
              file=sys.stderr)
    print(f"wrote {len(result.rows)} rows to {out}")
    return EXIT_INFEASIBLE if result.skipped else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plantedbisection",
        description="Bayesian inference in the planted bi-section model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a graph from the model")
    g.add_argument("--n", type=int, required=True, help="vertices per class")
    _add_model_args(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--theta0", help="true assignment as a bit string (default: sampled)")
    g.add_argument("--output", required=True, help="graph file to write")
    g.add_argument("--theta-output", help="file for the true assignment")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("posterior", help="posterior table (exact) or sample counts (mcmc)")
    p.add_argument("--graph", required=True)
    _add_model_args(p)
    _add_chain_args(p)
    p.add_argument("--output", required=True, help="CSV file to write")
    p.set_defaults(func=cmd_posterior)

    c = sub.add_parser("credible", help="credible set and its k_n-enlargement as JSON")
    c.add_argument("--graph", required=True)
    _add_model_args(c)
    _add_chain_args(c)
    c.add_argument("--level", type=float, default=0.9)
    c.add_argument("--kn", type=int, default=1)
    c.add_argument("--construction", choices=("minimal-order", "minimal-diameter"),
                   default="minimal-order")
    c.add_argument("--output", help="JSON file (default: stdout)")
    c.set_defaults(func=cmd_credible)

    b = sub.add_parser("bounds", help="evaluate every closed-form bound as JSON")
    b.add_argument("--n", type=int, required=True)
    _add_model_args(b)
    b.add_argument("--kn", type=int, default=1)
    b.add_argument("--C", type=float, default=DEFAULT_C)
    b.add_argument("--delta", type=float, default=0.1)
    b.add_argument("--A", type=float, default=1.0)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--output-dir", help=f"overrides the config and ${OUTPUT_DIR_ENV}")
    e.add_argument("--fixed-theta0", help="'block' or a bit string; pins theta0 for all replicates")
    e.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EnumerationTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (PlantedBisectionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
