"""Command line entry point: ``run``, ``verify`` and ``eta`` subcommands."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import GridError, ParameterError, UnknownScenarioError
from ..scatter import eta_from_s_params, read_sparams_csv
from . import scenarios, svgplot, verify
from .config import ScenarioConfig

EXIT_OK, EXIT_VERIFY, EXIT_SCENARIO, EXIT_PARAM, EXIT_IO = 0, 1, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lmqc", description="Phonon interference simulations")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a config file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    run.add_argument("--plot", action="store_true", help="also write plot.svg")
    run.add_argument("--seed", type=int, default=None, help="seed for shot sampling")

    ver = sub.add_parser("verify", help="run the oracle and invariant checks")
    ver.add_argument("--filter", default=None, help="only checks whose name contains this text")

    eta = sub.add_parser("eta", help="beamsplitter reflectivity from an S-parameter CSV")
    eta.add_argument("sparams", type=Path)
    eta.add_argument("--f0", type=float, default=3.925, help="operating frequency in GHz")
    sub.add_parser("list", help="list scenarios")
    return ap


def _run(args) -> int:
    try:
        cfg = ScenarioConfig.load(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.seed is not None:
        cfg.parameters["seed"] = args.seed
    table = scenarios.run(cfg)
    out = args.out or Path(cfg.output or "results")
    try:
        csv_path, _ = table.write(out)
        if args.plot:
            cols = scenarios.SCENARIOS[cfg.scenario].plot or tuple(table.columns[1:])
            svgplot.write_plot(table, cols, Path(out) / "plot.svg", cfg.scenario)
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    for k, v in table.metadata.items():
        if not k.startswith("config."):
            print(f"{k} = {v}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def _eta(args) -> int:
    try:
        recs = read_sparams_csv(args.sparams)
    except OSError as exc:
        print(f"error: cannot read {args.sparams}: {exc}", file=sys.stderr)
        return EXIT_IO
    eta, t1, t2 = eta_from_s_params(recs, args.f0)
    print(f"eta = {eta:.6f}")
    print(f"theta1 = {t1:.6f}")
    print(f"theta2 = {t2:.6f}")
    print(f"theta_sum = {t1 + t2:.6f}")
    if any(r.reciprocal_filled for r in recs):
        print("note: port-2 parameters filled by reciprocity")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "verify":
            results = verify.run_checks(args.filter)
            failed = [r for r in results if not r.passed]
            print(f"{len(results) - len(failed)}/{len(results)} checks passed")
            return EXIT_VERIFY if failed or not results else EXIT_OK
        if args.command == "eta":
            return _eta(args)
        if args.command == "list":
            for name, sc in scenarios.SCENARIOS.items():
                print(f"{name}: {sc.summary}")
            return EXIT_OK
    except UnknownScenarioError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_SCENARIO
    except (ParameterError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
