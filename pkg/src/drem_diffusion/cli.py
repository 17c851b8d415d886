"""Command line entry point: ``run`` a scenario or ``check`` it without running."""

from __future__ import annotations

import argparse
import json
import sys

from .scenario import BUILTINS, ScenarioError, check, load_scenario, run

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _load(source):
    # a built-in name stands in for a scenario file
    if source in BUILTINS:
        return load_scenario({"builtin": source})
    return load_scenario(source)


def build_parser():
    parser = argparse.ArgumentParser(prog="drem-diffusion", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the Monte Carlo experiment and write trace.csv and summary.json")
    r.add_argument("scenario", help="scenario JSON file or built-in name")
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default=".", help="output directory (default: current directory)")
    r.add_argument("--variant", choices=["cta", "atc", "isolated"])
    c = sub.add_parser("check", help="validate topology and scan excitation only")
    c.add_argument("scenario", help="scenario JSON file or built-in name")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args.scenario)
        if args.command == "check":
            result = check(config)
            passed = result["passed"]
        else:
            summary, _ = run(config, out_dir=args.out, trials=args.trials, seed=args.seed,
                             variant=args.variant)
            result, passed = summary.to_dict(), summary.passed
    except (ScenarioError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if passed else EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
