"""Command line entry point.

    aqeclab run --spec experiment.json --out results/ [--seed N] [--threads K]
    aqeclab list

Exit codes: 0 = success, 2 = spec error, 3 = numerical failure.  Errors are
reported as machine-readable JSON on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dynamics import StiffnessError
from .experiments import ExperimentSpec, SpecError, list_experiments, run_experiment

EXIT_OK = 0
EXIT_SPEC_ERROR = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqeclab",
                                     description="autonomous-QEC simulation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a JSON spec")
    run.add_argument("--spec", required=True, help="path to the experiment spec JSON")
    run.add_argument("--out", required=True, help="output directory for CSV + manifest")
    run.add_argument("--seed", type=int, default=None, help="override the spec seed")
    run.add_argument("--threads", type=int, default=1,
                     help="worker cap for independent sub-evolutions")
    sub.add_parser("list", help="list the available experiment kinds")
    return parser


def _error_json(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}))
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        print(json.dumps(list_experiments(), indent=2))
        return EXIT_OK
    try:
        raw = json.loads(Path(args.spec).read_text())
    except FileNotFoundError:
        return _error_json(EXIT_SPEC_ERROR, "spec-not-found", f"no such file: {args.spec}")
    except json.JSONDecodeError as exc:
        return _error_json(EXIT_SPEC_ERROR, "spec-parse-error", str(exc))
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = ExperimentSpec.from_dict(raw)
    except SpecError as exc:
        return _error_json(EXIT_SPEC_ERROR, "spec-invalid", str(exc))
    try:
        manifest = run_experiment(spec, args.out, threads=args.threads)
    except StiffnessError as exc:
        return _error_json(EXIT_NUMERICAL, "integrator-stiffness", str(exc))
    except (ValueError, RuntimeError) as exc:
        return _error_json(EXIT_NUMERICAL, "numerical-failure", str(exc))
    print(json.dumps({"status": "ok", "out": str(args.out),
                      "artifacts": manifest["artifacts"]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
