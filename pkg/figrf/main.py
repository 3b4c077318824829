"""Entry point for the FIGRF command-line tool."""

import argparse
from dataclasses import replace
from pathlib import Path
import sys

from loguru import logger

import cli
from config import RunConfig, default_output_dir
from dataset import DatasetError
from persistence import ModelFormatError

CONFIG_COMMANDS = ("importance", "tune", "run", "benchmark")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figrf",
        description="FIGRF - Feature-importance-guided random forests with annealed tuning",
    )
    parser.add_argument("--config", "-c", type=Path, help="Path to a JSON run configuration")
    parser.add_argument("--seed", type=int, help="Re-seed every random stream of the run")
    parser.add_argument("--out", "-o", type=Path, help="Output directory")
    parser.add_argument(
        "--threads", type=int, help="Worker threads for tree fitting (0 = all cores)"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("importance", help="Rank features and derive sampling probabilities")
    for name, text in (
        ("tune", "Anneal n_estimators and max_depth on the validation split"),
        ("run", "Full pipeline: importance, tuning, final evaluation"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--iterations", type=int, help="Annealing iterations")
        sub.add_argument("--initial-temp", type=float, help="Starting temperature")
        sub.add_argument("--cooling-rate", type=float, help="Geometric cooling factor in (0, 1)")

    for name, text in (
        ("predict", "Predict labels for a CSV with a saved model"),
        ("evaluate", "Score a saved model on a labelled CSV"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("model", type=Path, help="Model file written by 'run'")
        sub.add_argument("csv", type=Path, help="Input CSV")

    bench = commands.add_parser("benchmark", help="Repeat 'run' over several seeds")
    bench.add_argument(
        "--seeds", type=int, nargs="+", default=list(range(10)), help="Seeds to run (default 0..9)"
    )

    synth = commands.add_parser("synthesize", help="Write a seeded synthetic dataset as CSV")
    synth.add_argument("path", type=Path, help="Output CSV path")
    synth.add_argument("--samples", type=int, default=200)
    synth.add_argument("--informative", type=int, default=2)
    synth.add_argument("--noise", type=int, default=6)
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = "DEBUG" if verbose else "WARNING" if quiet else "INFO"
    logger.remove()
    logger.add(sys.stderr, level=level, format="{level:<7}| {message}")


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file plus command-line overrides."""
    if args.config is None:
        raise ValueError(f"'{args.command}' needs --config")
    config = RunConfig.load(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.out is not None:
        config = replace(config, output_dir=str(args.out))
    if args.threads is not None:
        config = replace(config, threads=args.threads)

    annealing = {
        field: value
        for field, value in (
            ("max_iterations", getattr(args, "iterations", None)),
            ("initial_temperature", getattr(args, "initial_temp", None)),
            ("cooling_rate", getattr(args, "cooling_rate", None)),
        )
        if value is not None
    }
    if annealing:
        config = replace(config, annealing=replace(config.annealing, **annealing))
    return config


def run_command(args: argparse.Namespace) -> None:
    if args.command in CONFIG_COMMANDS:
        config = load_run_config(args)
        if args.command == "importance":
            cli.cmd_importance(config)
        elif args.command == "tune":
            cli.cmd_tune(config)
        elif args.command == "run":
            cli.cmd_run(config)
        else:
            cli.cmd_benchmark(config, args.seeds)
        return

    out = args.out if args.out is not None else default_output_dir()
    if args.command == "predict":
        cli.cmd_predict(args.model, args.csv, out)
    elif args.command == "evaluate":
        cli.cmd_evaluate(args.model, args.csv, out)
    elif args.command == "synthesize":
        seed = args.seed if args.seed is not None else 0
        cli.cmd_synthesize(args.path, args.samples, args.informative, args.noise, seed)


def main(argv=None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        run_command(args)
    except (DatasetError, ModelFormatError) as exc:
        logger.error(str(exc))
        return 2
    except (ValueError, OSError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
