"""Command-line entry points: headless benchmark runs and the session service."""

from __future__ import annotations

import argparse
import sys

from .errors import StoryGraphError
from .experiments import ExperimentConfig, desk_profile, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storymorph",
        description="Evolve narrative-structure archives and serve design sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a headless benchmark experiment")
    run.add_argument(
        "--experiment",
        required=True,
        help="benchmark id 1-4 or a path to a .graph.json target",
    )
    run.add_argument("--dims", choices=("pair", "all"), default="pair")
    run.add_argument("--constraints", choices=("on", "off"), default="on")
    run.add_argument("--runs", type=int, default=None, help="independent seeds")
    run.add_argument("--generations", type=int, default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--offspring", type=int, default=None, help="parent pairs per generation")
    run.add_argument("--out", default=None, help="output directory for CSVs and checkpoints")
    run.add_argument(
        "--desk",
        action="store_true",
        help="desk-scale profile: 3 runs, 50 offspring pairs, 100 generations",
    )
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    serve = sub.add_parser("serve", help="start the interactive session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8750)
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig(
        experiment=args.experiment,
        dims=args.dims,
        constraints_enabled=args.constraints == "on",
        seed=args.seed,
        generations=args.generations,
    )
    if args.desk:
        config = desk_profile(config)
    overrides = {}
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.offspring is not None:
        overrides["offspring"] = args.offspring
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    return config


def _run_command(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = run_experiment(config, out_dir=args.out, jobs=args.jobs)
    metrics = result.metrics
    print(
        f"experiment {config.experiment} dims={config.dims} "
        f"constraints={'on' if config.constraints_enabled else 'off'} "
        f"runs={config.runs} generations={config.resolved_generations}"
    )
    print(f"coverage   {metrics.avg_coverage:.3f} +/- {metrics.std_coverage:.3f}")
    print(f"uniques    {metrics.avg_uniques:.1f} +/- {metrics.std_uniques:.1f}")
    print(f"fitness    {metrics.avg_fitness:.3f} +/- {metrics.std_fitness:.3f}")
    print(
        f"archive    {metrics.avg_archive_fitness:.3f} fitness, "
        f"{metrics.avg_archive_interestingness:.3f} interestingness"
    )
    if args.out:
        print(f"report written to {args.out}")
    return 0


def _serve_command(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_command(args)
        return _serve_command(args)
    except StoryGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
