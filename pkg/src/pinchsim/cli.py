"""Command-line interface.

    pinchsim <steady|evolve|perturb-init|perturb-field|combined>
             [--config FILE] [--<key> VALUE ...]

Every configuration key is available as a flag; flags override file values.
The exit code is 0 only if all inequality checks requested by the
experiment pass.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import ConfigError, ExperimentConfig, EXPERIMENT_KINDS, parse_config
from .experiments import ExperimentError, run_experiment


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "kind":
            continue
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, default=None, metavar=f.type.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinchsim",
        description=(
            "Two-species Vlasov-Poisson simulator with magnetically confined "
            "steady states and stability diagnostics"
        ),
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    descriptions = {
        "steady": "construct and certify a confined steady state",
        "evolve": "evolve the steady datum and record conservation diagnostics",
        "perturb-init": "stability report for perturbed initial data",
        "perturb-field": "paired runs under perturbed external field",
        "combined": "perturb initial data and field, combined bound",
    }
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=descriptions[kind])
        p.add_argument("--config", default=None, help="flat key=value config file")
        _add_config_flags(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        name: val
        for name, val in vars(args).items()
        if name not in ("config", "kind") and val is not None
    }
    overrides["kind"] = args.kind
    try:
        cfg = parse_config(args.config, overrides)
        summary = run_experiment(cfg)
    except (ConfigError, ExperimentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for key, val in summary.items():
        print(f"{key} = {val}")
    return 0 if summary.get("passed", False) else 1


if __name__ == "__main__":
    sys.exit(main())
