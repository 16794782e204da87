"""Headless benchmark runs: configure, evolve, checkpoint, and export CSVs.

A run evolves one archive against a built-in or custom target. The stepped
benchmark ("4") swaps in the next design-step target every 50 generations,
mirroring a designer iterating on a draft. Every run writes a per-generation
series, checkpoint grids of elite fitness, and a resumable snapshot; the
experiment aggregates final-run rows into a summary table.

All floats are written with six decimals so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .archive import Archive, ArchiveConfig, init_archive
from .errors import ValidationError
from .evaluation import DIMENSIONS, DimensionSpec
from .graphs import LevelConstraints, NarrativeGraph, canonical_hash, dumps, loads
from .targets import DESIGN_STEPS, builtin_target

PAIR_DIMS = ("step", "interestingness")
CHECKPOINT_CADENCE = 50
STEP_WINDOW = 50
GRANULARITY = 5

_FLOAT = "%.6f"

SERIES_COLUMNS = (
    "run",
    "generation",
    "target",
    "children",
    "inserted",
    "new_unique_feasible",
    "uniques_total",
    "children_fitness",
    "children_feasible_fitness",
    "children_interestingness",
    "archive_fitness",
    "archive_feasible_fitness",
    "archive_interestingness",
    "archive_feasible_interestingness",
    "coverage",
    "occupied_cells",
    "total_individuals",
)

SUMMARY_COLUMNS = (
    "experiment",
    "dims",
    "constraints",
    "runs",
    "generations",
    "offspring",
    "seed",
    "coverage_mean",
    "coverage_std",
    "uniques_mean",
    "uniques_std",
    "fitness_mean",
    "fitness_std",
    "interestingness_mean",
    "interestingness_std",
    "archive_fitness_mean",
    "archive_fitness_std",
    "archive_interestingness_mean",
    "archive_interestingness_std",
)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    runs: int = 5
    generations: int | None = None
    dims: str = "pair"
    constraints_enabled: bool = True
    seed: int = 0
    offspring: int = 100
    cell_capacity: int = 25
    initial_population: int = 1000
    mutation_probability: float = 0.5
    recipes_per_individual: int = 5

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        if self.generations is not None and self.generations < 1:
            raise ValidationError("generations must be >= 1")
        if self.dims not in ("pair", "all"):
            raise ValidationError("dims must be 'pair' or 'all'")

    @property
    def resolved_generations(self) -> int:
        if self.generations is not None:
            return self.generations
        if self.experiment == "4":
            return STEP_WINDOW * len(DESIGN_STEPS)
        return 500 if self.dims == "pair" else 250

    def dimension_spec(self) -> DimensionSpec:
        selected = PAIR_DIMS if self.dims == "pair" else DIMENSIONS
        return DimensionSpec(selected=tuple(selected), granularity=GRANULARITY)


def desk_profile(config: ExperimentConfig) -> ExperimentConfig:
    """Shrink a config to desk scale: 3 runs, 50 offspring pairs, and 100
    generations for the single-target benchmarks (the stepped benchmark keeps
    its 50-per-step cadence)."""
    generations = config.generations
    if generations is None and config.experiment != "4":
        generations = 100
    return replace(config, runs=3, offspring=50, generations=generations)


@dataclass(frozen=True)
class TargetPlan:
    """The targets a run walks through: one, or one per design window."""

    graphs: tuple[NarrativeGraph, ...]
    labels: tuple[str, ...]
    constraints: LevelConstraints

    def target_for(self, generation: int) -> tuple[NarrativeGraph, str]:
        index = min((generation - 1) // STEP_WINDOW, len(self.graphs) - 1)
        return self.graphs[index], self.labels[index]

    @property
    def final(self) -> NarrativeGraph:
        return self.graphs[-1]


def resolve_targets(experiment: str) -> TargetPlan:
    if experiment == "4":
        pairs = [builtin_target(step) for step in DESIGN_STEPS]
        return TargetPlan(
            graphs=tuple(graph for graph, _ in pairs),
            labels=DESIGN_STEPS,
            constraints=pairs[0][1],
        )
    if experiment in ("1", "2", "3"):
        graph, constraints = builtin_target(experiment)
        return TargetPlan(graphs=(graph,), labels=(experiment,), constraints=constraints)
    path = Path(experiment)
    if path.suffix == ".json" and path.exists():
        graph = loads(path.read_text(encoding="utf-8"))
        return TargetPlan(
            graphs=(graph,),
            labels=(path.stem,),
            constraints=LevelConstraints(heroes=2, enemies=2, quest_items=2),
        )
    raise ValidationError(
        f"unknown experiment {experiment!r}; expected 1-4 or a .graph.json path"
    )


@dataclass(frozen=True)
class EraMatrix:
    run: int
    generation: int
    label: str
    grid: tuple[tuple[float | None, ...], ...]


@dataclass(frozen=True)
class RunMetrics:
    """Cross-run aggregates. Fitness and interestingness average every child
    produced over the whole run (the search), not just the survivors; the
    archive_* pair reports the final archive's feasible elites instead."""

    avg_coverage: float
    std_coverage: float
    avg_uniques: float
    std_uniques: float
    avg_fitness: float
    std_fitness: float
    avg_interestingness: float
    std_interestingness: float
    avg_archive_fitness: float
    std_archive_fitness: float
    avg_archive_interestingness: float
    std_archive_interestingness: float
    per_run: tuple[dict, ...]
    series: tuple[dict, ...] = field(repr=False)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    metrics: RunMetrics
    eras: tuple[EraMatrix, ...]
    out_dir: str | None


def _archive_row_stats(archive: Archive) -> dict:
    members = archive.individuals()
    feasible = [ind for ind in members if ind.evaluation.feasible]

    def mean(values: list[float]) -> float:
        return sum(values) / len(values) if values else 0.0

    return {
        "archive_fitness": mean([m.evaluation.fitness for m in members]),
        "archive_feasible_fitness": mean([m.evaluation.fitness for m in feasible]),
        "archive_interestingness": mean(
            [m.evaluation.dimensions["interestingness"] for m in members]
        ),
        "archive_feasible_interestingness": mean(
            [m.evaluation.dimensions["interestingness"] for m in feasible]
        ),
    }


def _series_row(run: int, generation: int, label: str, archive: Archive, report=None) -> dict:
    row = {
        "run": run,
        "generation": generation,
        "target": label,
        "children": report.children if report else 0,
        "inserted": report.inserted if report else 0,
        "new_unique_feasible": report.new_unique_feasible if report else 0,
        "uniques_total": archive.unique_feasible_created,
        "children_fitness": report.mean_fitness if report else 0.0,
        "children_feasible_fitness": (
            report.mean_feasible_fitness
            if report and report.mean_feasible_fitness is not None
            else 0.0
        ),
        "children_interestingness": report.mean_interestingness if report else 0.0,
        "coverage": archive.coverage(),
        "occupied_cells": archive.occupied_cell_count(),
        "total_individuals": archive.total_individuals(),
    }
    row.update(_archive_row_stats(archive))
    return row


def _era_from_archive(archive: Archive, run: int, generation: int) -> EraMatrix:
    matrix = archive.projection_matrix(PAIR_DIMS)
    return EraMatrix(
        run=run,
        generation=generation,
        label=f"gen_{generation}",
        grid=tuple(tuple(row) for row in matrix),
    )


def _write_era(path: Path, era: EraMatrix) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in era.grid:
            writer.writerow(
                ["" if value is None else _FLOAT % value for value in row]
            )


def _format_cell(column: str, value) -> str:
    if isinstance(value, float):
        return _FLOAT % value
    return str(value)


def _write_series(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_COLUMNS)
        for row in rows:
            writer.writerow(
                [_format_cell(col, row[col]) for col in SERIES_COLUMNS]
            )


def read_series(path: Path) -> list[dict]:
    rows: list[dict] = []
    with path.open(newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            row: dict = {}
            for key, value in raw.items():
                if key in ("run", "generation", "children", "inserted",
                           "new_unique_feasible", "uniques_total",
                           "occupied_cells", "total_individuals"):
                    row[key] = int(value)
                elif key == "target":
                    row[key] = value
                else:
                    row[key] = float(value)
            rows.append(row)
    return rows


def run_single(
    config: ExperimentConfig, run_index: int, out_dir: str | None = None
) -> tuple[dict, list[dict], list[EraMatrix]]:
    """One evolutionary run; resumes from its checkpoint when out_dir has one."""
    plan = resolve_targets(config.experiment)
    generations = config.resolved_generations
    archive_config = ArchiveConfig(
        dims=config.dimension_spec(),
        cell_capacity=config.cell_capacity,
        offspring_per_generation=config.offspring,
        mutation_probability=config.mutation_probability,
        constraints=plan.constraints if config.constraints_enabled else None,
        seed=config.seed + run_index,
        initial_population=config.initial_population,
        recipes_per_individual=config.recipes_per_individual,
    )

    run_dir = None
    checkpoint_path = None
    if out_dir is not None:
        run_dir = Path(out_dir) / f"run_{run_index}"
        run_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = run_dir / "checkpoint.json"

    series: list[dict] = []
    eras: list[EraMatrix] = []
    first_target, first_label = plan.target_for(1)

    archive = None
    if checkpoint_path is not None and checkpoint_path.exists():
        saved = json.loads(checkpoint_path.read_text(encoding="utf-8"))
        if saved.get("archive", {}).get("config", {}).get("seed") == archive_config.seed:
            archive = Archive.from_document(saved["archive"])
            series = saved["series"]
    if archive is None:
        archive = init_archive(archive_config, first_target)
        series = [_series_row(run_index, 0, first_label, archive)]
    elif archive.generation > generations:
        raise ValidationError(
            f"checkpoint at {checkpoint_path} is past generation {generations}; "
            "use a fresh output directory"
        )

    label = series[-1]["target"]
    for generation in range(archive.generation + 1, generations + 1):
        required, required_label = plan.target_for(generation)
        if required_label != label:
            archive.inject_target(required)
            label = required_label
        report = archive.step_generation()
        series.append(_series_row(run_index, generation, label, archive, report))
        if generation % CHECKPOINT_CADENCE == 0 or generation == generations:
            era = _era_from_archive(archive, run_index, generation)
            eras.append(era)
            if run_dir is not None:
                _write_era(run_dir / f"era_{generation}.csv", era)
                checkpoint_path.write_text(
                    json.dumps(
                        {"archive": archive.to_document(), "series": series},
                        sort_keys=True,
                    ),
                    encoding="utf-8",
                )

    if not eras:
        # resumed from a finished checkpoint: rebuild matrices for the report
        for generation in range(CHECKPOINT_CADENCE, generations + 1, CHECKPOINT_CADENCE):
            if run_dir is not None and (run_dir / f"era_{generation}.csv").exists():
                eras.append(_read_era(run_dir / f"era_{generation}.csv", run_index, generation))
        if generations % CHECKPOINT_CADENCE != 0:
            eras.append(_era_from_archive(archive, run_index, generations))

    if out_dir is not None:
        _write_series(Path(out_dir) / f"run_{run_index}_series.csv", series)

    return series[-1], series, eras


def _read_era(path: Path, run: int, generation: int) -> EraMatrix:
    grid: list[tuple[float | None, ...]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            grid.append(tuple(None if cell == "" else float(cell) for cell in row))
    return EraMatrix(run=run, generation=generation, label=f"gen_{generation}", grid=tuple(grid))


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def run_experiment(
    config: ExperimentConfig, out_dir: str | None = None, jobs: int = 1
) -> ExperimentResult:
    """Run all configured seeds and aggregate final-generation metrics."""
    finals: list[dict] = []
    all_series: list[dict] = []
    eras: list[EraMatrix] = []
    if jobs > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(
                    run_single,
                    [config] * config.runs,
                    range(config.runs),
                    [out_dir] * config.runs,
                )
            )
    else:
        results = [
            run_single(config, run_index, out_dir)
            for run_index in range(config.runs)
        ]
    for final_row, series, run_eras in results:
        finals.append(final_row)
        all_series.extend(series)
        eras.extend(run_eras)

    search_fit: list[float] = []
    search_int: list[float] = []
    for _, series, _ in results:
        rows = [r for r in series if r["generation"] > 0]
        search_fit.append(
            sum(r["children_fitness"] for r in rows) / len(rows) if rows else 0.0
        )
        search_int.append(
            sum(r["children_interestingness"] for r in rows) / len(rows)
            if rows
            else 0.0
        )
    coverage = _mean_std([row["coverage"] for row in finals])
    uniques = _mean_std([float(row["uniques_total"]) for row in finals])
    fitness = _mean_std(search_fit)
    interest = _mean_std(search_int)
    arc_fit = _mean_std([row["archive_feasible_fitness"] for row in finals])
    arc_int = _mean_std([row["archive_feasible_interestingness"] for row in finals])
    metrics = RunMetrics(
        avg_coverage=coverage[0],
        std_coverage=coverage[1],
        avg_uniques=uniques[0],
        std_uniques=uniques[1],
        avg_fitness=fitness[0],
        std_fitness=fitness[1],
        avg_interestingness=interest[0],
        std_interestingness=interest[1],
        avg_archive_fitness=arc_fit[0],
        std_archive_fitness=arc_fit[1],
        avg_archive_interestingness=arc_int[0],
        std_archive_interestingness=arc_int[1],
        per_run=tuple(finals),
        series=tuple(all_series),
    )
    result = ExperimentResult(
        config=config, metrics=metrics, eras=tuple(eras), out_dir=out_dir
    )
    if out_dir is not None:
        export_report(result, out_dir)
    return result


def export_report(result: ExperimentResult, out_dir: str) -> list[str]:
    """Write summary.csv and target.graph.json; series/era files are written
    by the runs themselves. Re-export is byte-identical for the same result."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = result.config
    metrics = result.metrics
    summary_path = out / "summary.csv"
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(
            [
                config.experiment,
                config.dims,
                "on" if config.constraints_enabled else "off",
                config.runs,
                config.resolved_generations,
                config.offspring,
                config.seed,
                _FLOAT % metrics.avg_coverage,
                _FLOAT % metrics.std_coverage,
                _FLOAT % metrics.avg_uniques,
                _FLOAT % metrics.std_uniques,
                _FLOAT % metrics.avg_fitness,
                _FLOAT % metrics.std_fitness,
                _FLOAT % metrics.avg_interestingness,
                _FLOAT % metrics.std_interestingness,
                _FLOAT % metrics.avg_archive_fitness,
                _FLOAT % metrics.std_archive_fitness,
                _FLOAT % metrics.avg_archive_interestingness,
                _FLOAT % metrics.std_archive_interestingness,
            ]
        )
    target_path = out / "target.graph.json"
    target_path.write_text(
        dumps(resolve_targets(config.experiment).final), encoding="utf-8"
    )
    return [str(summary_path), str(target_path)]
