"""Command-line entry point.

Subcommands map to experiments; flags override the config file.
Exit codes: 0 success, 2 config error, 3 runtime numerical error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import ConfigError, ExperimentSpec, load_config
from .envsim import NumericalError
from .harness import run_experiment

SUBCOMMAND_EXPERIMENT = {
    "train": "convergence",
    "sweep-power": "sweep-power",
    "sweep-discount": "sweep-discount",
    "sweep-hidden": "sweep-hidden",
    "baselines": "baselines",
    "flops": "flops",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellfree-ddpg",
        description="Uplink cell-free beamforming experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_EXPERIMENT:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--replicates", type=int, default=None)
        p.add_argument("--episodes", type=int, default=None)
        p.add_argument("--steps", type=int, default=None)
    return parser


def apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    network, hyper = spec.network, spec.hyper
    if args.seed is not None:
        network = replace(network, seed=args.seed)
        hyper = replace(hyper, seed=args.seed)
    if args.episodes is not None:
        hyper = replace(hyper, episodes=args.episodes)
    if args.steps is not None:
        hyper = replace(hyper, steps_per_episode=args.steps)
    spec = replace(spec, network=network, hyper=hyper,
                   experiment=SUBCOMMAND_EXPERIMENT[args.command])
    if args.out is not None:
        spec = replace(spec, out_dir=args.out)
    if args.replicates is not None:
        spec = replace(spec, replicates=args.replicates)
    spec.validate()
    return spec


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = apply_overrides(load_config(args.config), args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        run_experiment(spec)
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {spec.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
