"""Interactive constrained MAP-Elites archive.

Cells are keyed by bucketed behavior dimensions; each holds a feasible and
an infeasible population, both bounded and sorted best-first. Evolution is
continuous: any generation may be followed by a new target graph, a new
dimension selection, or new level constraints, and the archive reshuffles
its members instead of restarting.

Determinism contract: one seeded rng drives everything, all iteration over
cells happens in sorted coordinate order, and serialization round-trips
byte-identically, so a resumed run replays exactly.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, replace
from random import Random

from .errors import ValidationError
from .evaluation import (
    DimensionSpec,
    bucketize,
    check_feasibility,
    evaluate,
)
from .graphs import (
    LevelConstraints,
    NarrativeGraph,
    canonical_hash,
    canonical_tokens,
    deserialize,
    levenshtein,
    serialize,
)
from .grammar import (
    Individual,
    PhenotypeStats,
    build_individual,
    crossover,
    grammar_from_document,
    grammar_to_document,
    identity_individual,
    mutate,
    random_grammar,
    recipe_from_document,
    recipe_to_document,
)

PRIMARY_PROJECTION = ("step", "interestingness")

# Parent picks inside a cell split between the champion and the crowd: the
# cell's best feasible member carries half the picks, the rest fall uniformly
# across both populations so mid-rank and infeasible members still breed.
GREEDY_PARENT_P = 0.5

ARCHIVE_FORMAT = "storymorph-archive/1"


@dataclass(frozen=True)
class ArchiveConfig:
    dims: DimensionSpec
    cell_capacity: int = 25
    offspring_per_generation: int = 100  # parent pairs; children = 2x
    mutation_probability: float = 0.5
    constraints: LevelConstraints | None = None
    seed: int = 0
    initial_population: int = 1000
    recipes_per_individual: int = 5

    def __post_init__(self) -> None:
        if self.cell_capacity < 1:
            raise ValidationError("cell_capacity must be >= 1")
        if self.offspring_per_generation < 1:
            raise ValidationError("offspring_per_generation must be >= 1")
        if not 0.0 <= self.mutation_probability <= 1.0:
            raise ValidationError("mutation_probability must be in [0,1]")
        if self.initial_population < 0:
            raise ValidationError("initial_population must be >= 0")
        if self.recipes_per_individual < 1:
            raise ValidationError("recipes_per_individual must be >= 1")


@dataclass(frozen=True)
class GenerationReport:
    generation: int
    children: int
    inserted: int
    new_unique_feasible: int
    feasible_children: int
    mean_fitness: float
    mean_feasible_fitness: float | None
    mean_interestingness: float
    coverage: float
    occupied_cells: int
    total_individuals: int


def _member_key(ind: Individual) -> tuple:
    return (-ind.evaluation.fitness, ind.digest, ind.seq)


class Cell:
    __slots__ = ("coords", "feasible", "infeasible")

    def __init__(self, coords: tuple[int, ...]):
        self.coords = coords
        self.feasible: list[Individual] = []
        self.infeasible: list[Individual] = []

    def members(self) -> list[Individual]:
        return self.feasible + self.infeasible


class Archive:
    """The evolving grid. Use init_archive() to create a seeded one."""

    def __init__(self, config: ArchiveConfig, target: NarrativeGraph):
        self._config = config
        self._rng = Random(config.seed)
        self._cells: dict[tuple[int, ...], Cell] = {}
        self._generation = 0
        self._seq = 0
        self.uniques_seen: set[str] = set()
        self._unique_feasible = 0
        self._coverage: dict[tuple[str, str, int], set[tuple[int, int]]] = {}
        self._set_target(target)

    # -- basic accessors ----------------------------------------------------

    @property
    def config(self) -> ArchiveConfig:
        return self._config

    @property
    def target(self) -> NarrativeGraph:
        return self._target

    @property
    def generation(self) -> int:
        return self._generation

    @property
    def unique_feasible_created(self) -> int:
        return self._unique_feasible

    def cells(self) -> list[Cell]:
        return [self._cells[coords] for coords in sorted(self._cells)]

    def individuals(self) -> list[Individual]:
        members: list[Individual] = []
        for cell in self.cells():
            members.extend(cell.feasible)
            members.extend(cell.infeasible)
        return members

    def occupied_cell_count(self) -> int:
        return len(self._cells)

    def total_individuals(self) -> int:
        return sum(
            len(c.feasible) + len(c.infeasible) for c in self._cells.values()
        )

    def mean_interestingness(self, feasible_only: bool = False) -> float:
        values = [
            ind.evaluation.dimensions["interestingness"]
            for ind in self.individuals()
            if ind.evaluation.feasible or not feasible_only
        ]
        if not values:
            return 0.0
        return sum(values) / len(values)

    # -- internals ------------------------------------------------------------

    def _set_target(self, target: NarrativeGraph) -> None:
        self._target = target
        self._target_tokens = canonical_tokens(target)
        self._target_digest = canonical_hash(target)

    def _coords_for(self, ind: Individual) -> tuple[int, ...]:
        dims = self._config.dims
        return tuple(
            bucketize(ind.evaluation.dimensions[d], dims.granularity)
            for d in dims.selected
        )

    def _make_individual(self, grammar) -> Individual:
        ind = build_individual(
            grammar,
            self._target,
            self._rng,
            constraints=self._config.constraints,
            recipe_count=self._config.recipes_per_individual,
            target_tokens=self._target_tokens,
            target_digest=self._target_digest,
        )
        self._seq += 1
        return replace(ind, seq=self._seq)

    def _insert(self, ind: Individual) -> bool:
        coords = self._coords_for(ind)
        cell = self._cells.get(coords)
        if cell is None:
            cell = Cell(coords)
            self._cells[coords] = cell
        pop = cell.feasible if ind.evaluation.feasible else cell.infeasible
        if len(pop) >= self._config.cell_capacity:
            worst = pop[-1]
            if ind.evaluation.fitness <= worst.evaluation.fitness:
                return False
            pop.pop()
        insort(pop, ind, key=_member_key)
        return True

    def _register(self, ind: Individual, count_unique: bool) -> tuple[bool, bool]:
        """Track digest novelty, then insert. Returns (inserted, novel_feasible)."""
        novel = ind.digest not in self.uniques_seen
        self.uniques_seen.add(ind.digest)
        novel_feasible = novel and ind.evaluation.feasible
        if count_unique and novel_feasible:
            self._unique_feasible += 1
        return (self._insert(ind), novel_feasible)

    def _drain(self) -> list[Individual]:
        members = self.individuals()
        self._cells.clear()
        return members

    def _observe_projection(
        self, projection: tuple[str, str], granularity: int
    ) -> set[tuple[int, int]]:
        key = (projection[0], projection[1], granularity)
        seen = self._coverage.setdefault(key, set())
        x, y = projection
        for cell in self._cells.values():
            if cell.feasible:
                elite = cell.feasible[0]
                seen.add(
                    (
                        bucketize(elite.evaluation.dimensions[x], granularity),
                        bucketize(elite.evaluation.dimensions[y], granularity),
                    )
                )
        return seen

    def _update_coverage(self) -> float:
        granularity = self._config.dims.granularity
        seen = self._observe_projection(PRIMARY_PROJECTION, granularity)
        return len(seen) / granularity**2

    def coverage(self, projection: tuple[str, str] = PRIMARY_PROJECTION) -> float:
        granularity = self._config.dims.granularity
        seen = self._observe_projection(projection, granularity)
        return len(seen) / granularity**2

    # -- lifecycle -------------------------------------------------------------

    def seed_population(self) -> None:
        """Create the initial random-grammar individuals plus the target."""
        for _ in range(self._config.initial_population):
            grammar = random_grammar(self._rng)
            self._register(self._make_individual(grammar), count_unique=False)
        self._insert_identity()
        self._update_coverage()

    def _insert_identity(self) -> None:
        ind = identity_individual(
            self._target,
            constraints=self._config.constraints,
            target_tokens=self._target_tokens,
        )
        self._seq += 1
        self._register(replace(ind, seq=self._seq), count_unique=False)

    def _pick_parent(self, order: list[tuple[int, ...]]) -> Individual:
        coords = order[self._rng.randrange(len(order))]
        cell = self._cells[coords]
        if cell.feasible and self._rng.random() < GREEDY_PARENT_P:
            return cell.feasible[0]
        index = self._rng.randrange(len(cell.feasible) + len(cell.infeasible))
        if index < len(cell.feasible):
            return cell.feasible[index]
        return cell.infeasible[index - len(cell.feasible)]

    def step_generation(self) -> GenerationReport:
        config = self._config
        order = sorted(self._cells)
        if not order:
            raise ValidationError("archive is empty; seed it before stepping")
        children: list[Individual] = []
        for _ in range(config.offspring_per_generation):
            first = self._pick_parent(order)
            second = self._pick_parent(order)
            offspring = crossover(first.grammar, second.grammar, self._rng)
            for grammar in offspring:
                if self._rng.random() < config.mutation_probability:
                    grammar = mutate(grammar, self._rng)
                children.append(self._make_individual(grammar))

        inserted = 0
        new_uniques = 0
        for child in children:
            was_inserted, novel_feasible = self._register(child, count_unique=True)
            inserted += was_inserted
            new_uniques += novel_feasible

        self._generation += 1
        coverage = self._update_coverage()

        feasible_children = [c for c in children if c.evaluation.feasible]
        mean_fitness = sum(c.evaluation.fitness for c in children) / len(children)
        mean_feasible = (
            sum(c.evaluation.fitness for c in feasible_children)
            / len(feasible_children)
            if feasible_children
            else None
        )
        mean_interest = sum(
            c.evaluation.dimensions["interestingness"] for c in children
        ) / len(children)
        return GenerationReport(
            generation=self._generation,
            children=len(children),
            inserted=inserted,
            new_unique_feasible=new_uniques,
            feasible_children=len(feasible_children),
            mean_fitness=mean_fitness,
            mean_feasible_fitness=mean_feasible,
            mean_interestingness=mean_interest,
            coverage=coverage,
            occupied_cells=len(self._cells),
            total_individuals=self.total_individuals(),
        )

    # -- interactive controls ----------------------------------------------------

    def inject_target(self, target: NarrativeGraph) -> None:
        """Swap the target; refresh step values; archive the target itself."""
        self._set_target(target)
        members = self._drain()
        for ind in members:
            theta = max(len(ind.tokens), len(self._target_tokens))
            step = (
                levenshtein(ind.tokens, self._target_tokens) / theta if theta else 0.0
            )
            step = min(1.0, max(0.0, step))
            dims = dict(ind.evaluation.dimensions)
            dims["step"] = step
            self._insert(
                replace(ind, evaluation=replace(ind.evaluation, dimensions=dims))
            )
        self._insert_identity()

    def set_dimensions(self, dims: DimensionSpec) -> None:
        """Re-bucket every individual under a new dimension selection."""
        self._config = replace(self._config, dims=dims)
        members = self._drain()
        for ind in members:
            self._insert(ind)

    def set_constraints(self, constraints: LevelConstraints | None) -> None:
        """Reclassify every individual under new level budgets."""
        self._config = replace(self._config, constraints=constraints)
        members = self._drain()
        for ind in members:
            self._insert(self._reclassified(ind))

    def _reclassified(self, ind: Individual) -> Individual:
        violations = self._violations_from_stats(ind.stats)
        feasible = not violations
        if feasible == ind.evaluation.feasible and violations == ind.evaluation.violations:
            return ind
        fitness = (
            ind.evaluation.coherence if feasible else ind.evaluation.infeasible_score
        )
        return replace(
            ind,
            evaluation=replace(
                ind.evaluation,
                feasible=feasible,
                fitness=fitness,
                violations=violations,
            ),
        )

    def _violations_from_stats(self, stats: PhenotypeStats) -> tuple[str, ...]:
        violations: list[str] = []
        if not stats.connected:
            violations.append("connectivity")
        if stats.multi_self_conflict:
            violations.append("self_conflicts")
        constraints = self._config.constraints
        if constraints is not None:
            if stats.heroes > constraints.heroes:
                violations.append("heroes")
            if stats.villains > constraints.enemies:
                violations.append("enemies")
            if stats.devices > constraints.quest_items:
                violations.append("quest_items")
        return tuple(violations)

    # -- views ---------------------------------------------------------------------

    def snapshot(self, projection: tuple[str, str] | None = None) -> dict:
        """2-D grid of best elites plus cumulative coverage for a projection."""
        dims = self._config.dims
        if projection is None:
            if len(dims.selected) < 2:
                raise ValidationError("snapshot needs a two-dimension projection")
            projection = (dims.selected[0], dims.selected[1])
        DimensionSpec(selected=projection, granularity=dims.granularity)  # validates
        granularity = dims.granularity
        x, y = projection
        best: dict[tuple[int, int], Individual] = {}
        for cell in self.cells():
            if not cell.feasible:
                continue
            elite = cell.feasible[0]
            coords = (
                bucketize(elite.evaluation.dimensions[x], granularity),
                bucketize(elite.evaluation.dimensions[y], granularity),
            )
            current = best.get(coords)
            if (
                current is None
                or elite.evaluation.fitness > current.evaluation.fitness
                or (
                    elite.evaluation.fitness == current.evaluation.fitness
                    and elite.digest < current.digest
                )
            ):
                best[coords] = elite
        seen = self._observe_projection(projection, granularity)
        return {
            "generation": self._generation,
            "coverage": len(seen) / granularity**2,
            "grid": [
                {
                    "cell": [i, j],
                    "fitness": best[(i, j)].evaluation.fitness,
                    "digest": best[(i, j)].digest,
                }
                for i, j in sorted(best)
            ],
            "dims": [x, y],
        }

    def projection_matrix(
        self, projection: tuple[str, str] | None = None
    ) -> list[list[float | None]]:
        """Dense fitness matrix of the snapshot grid (rows = first dim)."""
        doc = self.snapshot(projection)
        granularity = self._config.dims.granularity
        matrix: list[list[float | None]] = [
            [None] * granularity for _ in range(granularity)
        ]
        for entry in doc["grid"]:
            i, j = entry["cell"]
            matrix[i][j] = entry["fitness"]
        return matrix

    def elite_at(
        self, i: int, j: int, projection: tuple[str, str] | None = None
    ) -> Individual | None:
        """Best feasible elite whose projected coords are (i, j)."""
        dims = self._config.dims
        if projection is None:
            if len(dims.selected) < 2:
                raise ValidationError("elite lookup needs a two-dimension projection")
            projection = (dims.selected[0], dims.selected[1])
        granularity = dims.granularity
        x, y = projection
        found: Individual | None = None
        for cell in self.cells():
            if not cell.feasible:
                continue
            elite = cell.feasible[0]
            coords = (
                bucketize(elite.evaluation.dimensions[x], granularity),
                bucketize(elite.evaluation.dimensions[y], granularity),
            )
            if coords != (i, j):
                continue
            if (
                found is None
                or elite.evaluation.fitness > found.evaluation.fitness
                or (
                    elite.evaluation.fitness == found.evaluation.fitness
                    and elite.digest < found.digest
                )
            ):
                found = elite
        return found

    # -- integrity -------------------------------------------------------------------

    def validate(self) -> None:
        """Recompute-and-assert every archive invariant. Test hook; slow."""
        capacity = self._config.cell_capacity
        total = 0
        for coords in sorted(self._cells):
            cell = self._cells[coords]
            assert cell.feasible or cell.infeasible, "empty cell retained"
            for pop, expect_feasible in ((cell.feasible, True), (cell.infeasible, False)):
                assert len(pop) <= capacity, "population over capacity"
                fitnesses = [ind.evaluation.fitness for ind in pop]
                assert fitnesses == sorted(fitnesses, reverse=True), "population unsorted"
                for ind in pop:
                    assert ind.evaluation.feasible == expect_feasible, "population mix-up"
                    assert self._coords_for(ind) == coords, "stale coords"
                    feasible, violations = check_feasibility(
                        ind.phenotype, self._config.constraints
                    )
                    assert feasible == expect_feasible, "feasibility drift"
                    assert violations == ind.evaluation.violations, "violations drift"
                    fresh = evaluate(
                        ind.phenotype,
                        target=self._target,
                        constraints=self._config.constraints,
                        target_tokens=self._target_tokens,
                    )
                    assert abs(fresh.fitness - ind.evaluation.fitness) < 1e-9, (
                        "fitness drift"
                    )
                    for dim, value in fresh.dimensions.items():
                        assert abs(value - ind.evaluation.dimensions[dim]) < 1e-9, (
                            f"dimension drift: {dim}"
                        )
            total += len(cell.feasible) + len(cell.infeasible)
        assert total <= len(self._cells) * 2 * capacity, "archive overfull"

    # -- persistence ------------------------------------------------------------------

    def to_document(self) -> dict:
        config = self._config
        return {
            "format": ARCHIVE_FORMAT,
            "config": {
                "dims": {
                    "selected": list(config.dims.selected),
                    "granularity": config.dims.granularity,
                },
                "cell_capacity": config.cell_capacity,
                "offspring_per_generation": config.offspring_per_generation,
                "mutation_probability": config.mutation_probability,
                "constraints": (
                    {
                        "heroes": config.constraints.heroes,
                        "enemies": config.constraints.enemies,
                        "quest_items": config.constraints.quest_items,
                    }
                    if config.constraints is not None
                    else None
                ),
                "seed": config.seed,
                "initial_population": config.initial_population,
                "recipes_per_individual": config.recipes_per_individual,
            },
            "target": serialize(self._target),
            "generation": self._generation,
            "seq": self._seq,
            "uniques_seen": sorted(self.uniques_seen),
            "unique_feasible_created": self._unique_feasible,
            "coverage": {
                f"{x}|{y}|{granularity}": sorted(list(pair) for pair in seen)
                for (x, y, granularity), seen in sorted(self._coverage.items())
            },
            "rng_state": _rng_state_to_list(self._rng.getstate()),
            "cells": [
                {
                    "coords": list(coords),
                    "feasible": [
                        _individual_to_document(ind)
                        for ind in self._cells[coords].feasible
                    ],
                    "infeasible": [
                        _individual_to_document(ind)
                        for ind in self._cells[coords].infeasible
                    ],
                }
                for coords in sorted(self._cells)
            ],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Archive":
        if doc.get("format") != ARCHIVE_FORMAT:
            raise ValidationError(f"unsupported archive format {doc.get('format')!r}")
        raw = doc["config"]
        constraints = raw.get("constraints")
        config = ArchiveConfig(
            dims=DimensionSpec(
                selected=tuple(raw["dims"]["selected"]),
                granularity=raw["dims"]["granularity"],
            ),
            cell_capacity=raw["cell_capacity"],
            offspring_per_generation=raw["offspring_per_generation"],
            mutation_probability=raw["mutation_probability"],
            constraints=(
                LevelConstraints(
                    heroes=constraints["heroes"],
                    enemies=constraints["enemies"],
                    quest_items=constraints["quest_items"],
                )
                if constraints is not None
                else None
            ),
            seed=raw["seed"],
            initial_population=raw["initial_population"],
            recipes_per_individual=raw["recipes_per_individual"],
        )
        archive = cls(config, deserialize(doc["target"]))
        archive._generation = doc["generation"]
        archive._seq = doc["seq"]
        archive.uniques_seen = set(doc["uniques_seen"])
        archive._unique_feasible = doc["unique_feasible_created"]
        for key, pairs in doc.get("coverage", {}).items():
            x, y, granularity = key.split("|")
            archive._coverage[(x, y, int(granularity))] = {
                (i, j) for i, j in pairs
            }
        for cell_doc in doc["cells"]:
            coords = tuple(cell_doc["coords"])
            cell = Cell(coords)
            cell.feasible = [
                _individual_from_document(d) for d in cell_doc["feasible"]
            ]
            cell.infeasible = [
                _individual_from_document(d) for d in cell_doc["infeasible"]
            ]
            archive._cells[coords] = cell
        archive._rng.setstate(_rng_state_from_list(doc["rng_state"]))
        return archive


def init_archive(config: ArchiveConfig, target: NarrativeGraph) -> Archive:
    """Seeded archive: initial random grammars plus the target individual."""
    archive = Archive(config, target)
    archive.seed_population()
    return archive


def _rng_state_to_list(state: tuple) -> list:
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_state_from_list(data: list) -> tuple:
    version, internal, gauss = data
    return (version, tuple(internal), gauss)


def _individual_to_document(ind: Individual) -> dict:
    ev = ind.evaluation
    return {
        "grammar": grammar_to_document(ind.grammar),
        "recipe": recipe_to_document(ind.best_recipe),
        "phenotype": serialize(ind.phenotype),
        "seq": ind.seq,
        "evaluation": {
            "feasible": ev.feasible,
            "fitness": ev.fitness,
            "cohesion": ev.cohesion,
            "consistency": ev.consistency,
            "coherence": ev.coherence,
            "infeasible_score": ev.infeasible_score,
            "dimensions": dict(ev.dimensions),
            "violations": list(ev.violations),
        },
        "stats": {
            "connected": ind.stats.connected,
            "multi_self_conflict": ind.stats.multi_self_conflict,
            "heroes": ind.stats.heroes,
            "villains": ind.stats.villains,
            "devices": ind.stats.devices,
        },
    }


def _individual_from_document(doc: dict) -> Individual:
    from .evaluation import Evaluation

    phenotype = deserialize(doc["phenotype"])
    raw_ev = doc["evaluation"]
    raw_stats = doc["stats"]
    return Individual(
        grammar=grammar_from_document(doc["grammar"]),
        best_recipe=recipe_from_document(doc["recipe"]),
        phenotype=phenotype,
        evaluation=Evaluation(
            feasible=raw_ev["feasible"],
            fitness=raw_ev["fitness"],
            cohesion=raw_ev["cohesion"],
            consistency=raw_ev["consistency"],
            coherence=raw_ev["coherence"],
            infeasible_score=raw_ev["infeasible_score"],
            dimensions=dict(raw_ev["dimensions"]),
            violations=tuple(raw_ev["violations"]),
        ),
        digest=canonical_hash(phenotype),
        tokens=canonical_tokens(phenotype),
        stats=PhenotypeStats(
            connected=raw_stats["connected"],
            multi_self_conflict=raw_stats["multi_self_conflict"],
            heroes=raw_stats["heroes"],
            villains=raw_stats["villains"],
            devices=raw_stats["devices"],
        ),
        seq=doc["seq"],
    )
