"""Archive behavior: insertion, evolution, interactive controls, persistence."""

import json
from random import Random

import pytest

from storymorph.archive import (
    Archive,
    ArchiveConfig,
    GenerationReport,
    init_archive,
)
from storymorph.errors import UnknownDimensionError, ValidationError
from storymorph.evaluation import DIMENSIONS, DimensionSpec
from storymorph.graphs import (
    EdgeKind,
    LevelConstraints,
    NarrativeGraph,
    NarrativeEdge,
    NarrativeNode,
    Trope,
    default_graph,
)

PAIR = DimensionSpec(selected=("step", "interestingness"), granularity=5)


def small_config(**overrides) -> ArchiveConfig:
    base = dict(
        dims=PAIR,
        cell_capacity=5,
        offspring_per_generation=8,
        mutation_probability=0.5,
        seed=11,
        initial_population=60,
        recipes_per_individual=3,
    )
    base.update(overrides)
    return ArchiveConfig(**base)


def richer_target() -> NarrativeGraph:
    return NarrativeGraph(
        nodes=[
            NarrativeNode("hero", Trope.HERO),
            NarrativeNode("conflict", Trope.CONFLICT),
            NarrativeNode("enemy", Trope.ENEMY),
            NarrativeNode("dra", Trope.DRA),
            NarrativeNode("c2", Trope.CONFLICT),
            NarrativeNode("mcg", Trope.MCG),
        ],
        edges=[
            NarrativeEdge("hero", "conflict", EdgeKind.PLAIN),
            NarrativeEdge("conflict", "enemy", EdgeKind.PLAIN),
            NarrativeEdge("hero", "c2", EdgeKind.PLAIN),
            NarrativeEdge("c2", "dra", EdgeKind.PLAIN),
            NarrativeEdge("hero", "mcg", EdgeKind.PLAIN),
            NarrativeEdge("dra", "mcg", EdgeKind.ENTAIL),
        ],
    )


def test_config_validation():
    with pytest.raises(ValidationError):
        ArchiveConfig(dims=PAIR, cell_capacity=0)
    with pytest.raises(ValidationError):
        ArchiveConfig(dims=PAIR, offspring_per_generation=0)
    with pytest.raises(ValidationError):
        ArchiveConfig(dims=PAIR, mutation_probability=1.5)
    with pytest.raises(ValidationError):
        ArchiveConfig(dims=PAIR, recipes_per_individual=0)


def test_init_seeds_population_and_target():
    archive = init_archive(small_config(), default_graph())
    assert archive.generation == 0
    assert archive.total_individuals() > 0
    assert archive.occupied_cell_count() > 0
    # the target itself is archived: some member reproduces it exactly
    digests = {ind.digest for ind in archive.individuals()}
    from storymorph.graphs import canonical_hash

    assert canonical_hash(default_graph()) in digests
    # seeding never counts toward the search-novelty tally
    assert archive.unique_feasible_created == 0
    assert len(archive.uniques_seen) > 0
    archive.validate()


def test_init_determinism():
    a = init_archive(small_config(), default_graph())
    b = init_archive(small_config(), default_graph())
    assert a.to_document() == b.to_document()


def test_constrained_init_sorts_budget_breakers_into_infeasible():
    constraints = LevelConstraints(heroes=2, enemies=2, quest_items=2)
    archive = init_archive(
        small_config(constraints=constraints, initial_population=120),
        default_graph(),
    )
    for cell in archive.cells():
        for ind in cell.feasible:
            assert ind.stats.heroes <= 2
            assert ind.stats.villains <= 2
            assert ind.stats.devices <= 2
    archive.validate()


def test_step_generation_reports_and_invariants():
    archive = init_archive(small_config(), default_graph())
    report = archive.step_generation()
    assert isinstance(report, GenerationReport)
    assert report.generation == 1
    assert report.children == 2 * archive.config.offspring_per_generation
    assert 0.0 <= report.mean_fitness <= 1.0
    assert 0.0 <= report.coverage <= 1.0
    assert report.occupied_cells == archive.occupied_cell_count()
    assert report.total_individuals == archive.total_individuals()
    for _ in range(4):
        archive.step_generation()
    assert archive.generation == 5
    archive.validate()


def test_stepping_empty_archive_fails():
    archive = Archive(small_config(), default_graph())
    with pytest.raises(ValidationError):
        archive.step_generation()


def test_elites_never_regress():
    archive = init_archive(small_config(), default_graph())
    for _ in range(6):
        before = {
            cell.coords: cell.feasible[0].evaluation.fitness
            for cell in archive.cells()
            if cell.feasible
        }
        archive.step_generation()
        after = {
            cell.coords: cell.feasible[0].evaluation.fitness
            for cell in archive.cells()
            if cell.feasible
        }
        for coords, fitness in before.items():
            assert after[coords] >= fitness - 1e-12


def test_uniques_and_coverage_monotonic():
    archive = init_archive(small_config(), default_graph())
    last_uniques = archive.unique_feasible_created
    last_seen = len(archive.uniques_seen)
    last_coverage = archive.coverage()
    for _ in range(5):
        report = archive.step_generation()
        assert archive.unique_feasible_created >= last_uniques
        assert len(archive.uniques_seen) >= last_seen
        assert report.coverage >= last_coverage - 1e-12
        last_uniques = archive.unique_feasible_created
        last_seen = len(archive.uniques_seen)
        last_coverage = report.coverage


def test_inject_same_target_is_stable():
    archive = init_archive(small_config(), default_graph())
    archive.step_generation()
    before = archive.to_document()
    archive.inject_target(default_graph())
    after = archive.to_document()
    assert before["cells"] == after["cells"]
    assert before["uniques_seen"] == after["uniques_seen"]


def test_inject_new_target_rebuckets_step():
    archive = init_archive(small_config(), default_graph())
    archive.step_generation()
    target = richer_target()
    archive.inject_target(target)
    from storymorph.evaluation import step_distance
    from storymorph.graphs import canonical_hash

    target_digest = canonical_hash(target)
    found_identity = False
    for ind in archive.individuals():
        expected = step_distance(ind.phenotype, target)
        assert ind.evaluation.dimensions["step"] == pytest.approx(expected)
        if ind.digest == target_digest:
            found_identity = True
            assert ind.evaluation.dimensions["step"] == 0.0
    assert found_identity
    archive.validate()


def test_set_dimensions_round_trip_preserves_membership():
    archive = init_archive(small_config(), default_graph())
    for _ in range(3):
        archive.step_generation()
    before = archive.to_document()
    all_dims = DimensionSpec(selected=DIMENSIONS, granularity=5)
    archive.set_dimensions(all_dims)
    assert archive.occupied_cell_count() >= len(before["cells"])
    archive.validate()
    archive.set_dimensions(PAIR)
    after = archive.to_document()
    assert before == after


def test_set_dimensions_finer_granularity_spreads_cells():
    archive = init_archive(small_config(), default_graph())
    for _ in range(3):
        archive.step_generation()
    coarse = archive.occupied_cell_count()
    archive.set_dimensions(DimensionSpec(selected=PAIR.selected, granularity=10))
    assert archive.occupied_cell_count() >= coarse
    archive.validate()


def test_set_dimensions_rejects_unknown_ids():
    archive = init_archive(small_config(initial_population=10), default_graph())
    with pytest.raises(UnknownDimensionError):
        archive.set_dimensions(DimensionSpec(selected=("step", "novelty")))


def test_set_constraints_reclassifies_in_both_directions():
    archive = init_archive(small_config(initial_population=200), default_graph())
    tight = LevelConstraints(heroes=1, enemies=1, quest_items=1)
    archive.set_constraints(tight)
    saw_budget_violation = False
    for ind in archive.individuals():
        over = (
            ind.stats.heroes > 1 or ind.stats.villains > 1 or ind.stats.devices > 1
        )
        if over:
            assert not ind.evaluation.feasible
            saw_budget_violation = True
    assert saw_budget_violation
    archive.validate()
    archive.set_constraints(None)
    for ind in archive.individuals():
        budget_free = {"heroes", "enemies", "quest_items"}
        assert not budget_free & set(ind.evaluation.violations)
    archive.validate()


def test_snapshot_schema_and_coverage_denominator():
    archive = init_archive(small_config(), default_graph())
    archive.step_generation()
    doc = archive.snapshot()
    assert set(doc) == {"generation", "coverage", "grid", "dims"}
    assert doc["dims"] == ["step", "interestingness"]
    assert doc["generation"] == 1
    occupied = {
        tuple(entry["cell"]) for entry in doc["grid"]
    }
    assert len(occupied) == len(doc["grid"])
    # coverage is cumulative over a 5x5 grid, so it can exceed live occupancy
    assert doc["coverage"] >= len(occupied) / 25 - 1e-12
    for entry in doc["grid"]:
        i, j = entry["cell"]
        assert 0 <= i < 5 and 0 <= j < 5
        assert 0.0 <= entry["fitness"] <= 1.0
        assert len(entry["digest"]) == 64


def test_snapshot_supports_unselected_projections():
    archive = init_archive(small_config(), default_graph())
    doc = archive.snapshot(("diversity", "conflicts"))
    assert doc["dims"] == ["diversity", "conflicts"]
    with pytest.raises(UnknownDimensionError):
        archive.snapshot(("step", "novelty"))


def test_snapshot_matches_elite_lookup():
    archive = init_archive(small_config(), default_graph())
    archive.step_generation()
    doc = archive.snapshot()
    for entry in doc["grid"]:
        i, j = entry["cell"]
        elite = archive.elite_at(i, j)
        assert elite is not None
        assert elite.digest == entry["digest"]
        assert elite.evaluation.fitness == pytest.approx(entry["fitness"])
    assert archive.elite_at(4, 4) is None or any(
        entry["cell"] == [4, 4] for entry in doc["grid"]
    )


def test_projection_matrix_mirrors_snapshot():
    archive = init_archive(small_config(), default_graph())
    matrix = archive.projection_matrix()
    doc = archive.snapshot()
    filled = {
        (i, j)
        for i in range(5)
        for j in range(5)
        if matrix[i][j] is not None
    }
    assert filled == {tuple(entry["cell"]) for entry in doc["grid"]}


def test_checkpoint_round_trip_is_byte_identical():
    archive = init_archive(small_config(), default_graph())
    for _ in range(2):
        archive.step_generation()
    doc = archive.to_document()
    text = json.dumps(doc, sort_keys=True)
    restored = Archive.from_document(json.loads(text))
    assert json.dumps(restored.to_document(), sort_keys=True) == text


def test_resume_replays_identically():
    straight = init_archive(small_config(), default_graph())
    for _ in range(6):
        straight.step_generation()

    resumed = init_archive(small_config(), default_graph())
    for _ in range(3):
        resumed.step_generation()
    resumed = Archive.from_document(
        json.loads(json.dumps(resumed.to_document()))
    )
    for _ in range(3):
        resumed.step_generation()

    assert straight.to_document() == resumed.to_document()


def test_from_document_rejects_other_formats():
    with pytest.raises(ValidationError):
        Archive.from_document({"format": "other/9"})


def test_full_session_survives_every_control_change():
    # one continuous run: evolve, inject, switch dims, constrain, evolve again
    archive = init_archive(small_config(), default_graph())
    archive.step_generation()
    archive.inject_target(richer_target())
    archive.step_generation()
    archive.set_dimensions(DimensionSpec(selected=DIMENSIONS, granularity=5))
    archive.step_generation()
    archive.set_constraints(LevelConstraints(heroes=2, enemies=2, quest_items=2))
    archive.step_generation()
    archive.set_dimensions(PAIR)
    report = archive.step_generation()
    assert report.generation == 5
    archive.validate()
