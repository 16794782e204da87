"""Fitness, feasibility and behavior dimensions.

Feasible graphs are scored by coherence (consistency and cohesion in equal
parts); infeasible graphs by a closeness-to-feasibility score. Seven behavior
dimensions place a graph in the search grid; all values live in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import UnknownDimensionError, ValidationError
from .graphs import (
    LevelConstraints,
    NarrativeGraph,
    TropeClass,
    canonical_tokens,
    connectivity,
    levenshtein,
)
from .patterns import PatternKind, PatternSet, detect_patterns

# Wire ids of the behavior dimensions.
DIMENSIONS = (
    "step",
    "interestingness",
    "diversity",
    "conflicts",
    "plot_points",
    "plot_twists",
    "plot_devices",
)

# Count dimensions saturate at this many instances.
CONFLICT_SCALE = 5
PLOT_SCALE = 5

# Fake conflicts may cost up to this much consistency.
FAKE_CONFLICT_PENALTY = 0.3

INFEASIBLE_WEIGHTS = (0.5, 0.25, 0.25)


def _clamp(value: float) -> float:
    return 0.0 if value < 0.0 else 1.0 if value > 1.0 else value


@dataclass(frozen=True)
class DimensionSpec:
    """Which dimensions span the archive grid, and how finely."""

    selected: tuple[str, ...]
    granularity: int = 5

    def __post_init__(self) -> None:
        if not self.selected:
            raise ValidationError("at least one dimension must be selected")
        seen = set()
        for dim in self.selected:
            if dim not in DIMENSIONS:
                raise UnknownDimensionError(f"unknown dimension {dim!r}")
            if dim in seen:
                raise ValidationError(f"dimension {dim!r} selected twice")
            seen.add(dim)
        if self.granularity < 2:
            raise ValidationError("granularity must be at least 2")


@dataclass(frozen=True)
class Evaluation:
    feasible: bool
    fitness: float
    cohesion: float
    consistency: float
    coherence: float
    infeasible_score: float
    dimensions: Mapping[str, float]
    violations: tuple[str, ...] = field(default_factory=tuple)


def cohesion(graph: NarrativeGraph, patterns: PatternSet | None = None) -> float:
    """Share of the graph that is not auxiliary filler."""
    patterns = patterns if patterns is not None else detect_patterns(graph)
    auxiliary = patterns.auxiliary_count()
    denominator = graph.node_count + graph.edge_count
    return _clamp(1.0 - auxiliary / denominator)


def consistency(graph: NarrativeGraph, patterns: PatternSet | None = None) -> float:
    """Mean micro quality, discounted by the fake-conflict fraction."""
    patterns = patterns if patterns is not None else detect_patterns(graph)
    micro = patterns.micro()
    mean_quality = sum(inst.quality for inst in micro) / len(micro)
    conflicts = patterns.by_kind(PatternKind.CONFLICT)
    penalty = 0.0
    if conflicts:
        fakes = sum(1 for inst in conflicts if inst.fake)
        penalty = FAKE_CONFLICT_PENALTY * fakes / len(conflicts)
    return _clamp(mean_quality - penalty)


def coherence(graph: NarrativeGraph, patterns: PatternSet | None = None) -> float:
    patterns = patterns if patterns is not None else detect_patterns(graph)
    return _clamp(0.5 * consistency(graph, patterns) + 0.5 * cohesion(graph, patterns))


def invalid_self_conflicts(patterns: PatternSet) -> int:
    """Self-conflicts beyond the one each node is allowed."""
    return sum(
        max(0, count - 1) for count in patterns.self_conflict_counts().values()
    )


def infeasible_fitness(
    graph: NarrativeGraph, patterns: PatternSet | None = None
) -> float:
    """How close an infeasible graph is to satisfying the structural rules."""
    patterns = patterns if patterns is not None else detect_patterns(graph)
    _, reachable = connectivity(graph)
    invalid = invalid_self_conflicts(patterns)
    w_cohesion, w_reach, w_valid = INFEASIBLE_WEIGHTS
    score = (
        w_cohesion * cohesion(graph, patterns)
        + w_reach * reachable
        + w_valid * (1.0 - invalid / graph.node_count)
    )
    return _clamp(score)


def class_counts(graph: NarrativeGraph) -> dict[TropeClass, int]:
    counts = {cls: 0 for cls in TropeClass}
    for node in graph.nodes:
        counts[node.trope.trope_class] += 1
    return counts


def check_feasibility(
    graph: NarrativeGraph,
    constraints: LevelConstraints | None = None,
    patterns: PatternSet | None = None,
) -> tuple[bool, tuple[str, ...]]:
    """Structural feasibility plus optional level budgets."""
    patterns = patterns if patterns is not None else detect_patterns(graph)
    violations: list[str] = []
    fully_connected, _ = connectivity(graph)
    if not fully_connected:
        violations.append("connectivity")
    if any(count > 1 for count in patterns.self_conflict_counts().values()):
        violations.append("self_conflicts")
    if constraints is not None:
        counts = class_counts(graph)
        heroes = counts[TropeClass.HERO_CHARACTER]
        villains = counts[TropeClass.VILLAIN_CHARACTER]
        devices = counts[TropeClass.PLOT_DEVICE]
        if heroes > constraints.heroes:
            violations.append("heroes")
        if villains > constraints.enemies:
            violations.append("enemies")
        if devices > constraints.quest_items:
            violations.append("quest_items")
    return (not violations, tuple(violations))


def _mean_quality(patterns: PatternSet, kind: PatternKind) -> float:
    instances = patterns.by_kind(kind)
    if not instances:
        return 0.0
    return sum(inst.quality for inst in instances) / len(instances)


def interestingness(graph: NarrativeGraph, patterns: PatternSet | None = None) -> float:
    patterns = patterns if patterns is not None else detect_patterns(graph)
    return _clamp(
        (
            _mean_quality(patterns, PatternKind.ACTIVE_DEVICE)
            + _mean_quality(patterns, PatternKind.PLOT_POINT)
            + _mean_quality(patterns, PatternKind.PLOT_TWIST)
        )
        / 3.0
    )


def step_distance(
    graph: NarrativeGraph,
    target: NarrativeGraph | None = None,
    target_tokens: tuple[str, ...] | None = None,
) -> float:
    if target is None and target_tokens is None:
        raise ValidationError("the step dimension needs a target graph")
    tokens = canonical_tokens(graph)
    other = target_tokens if target_tokens is not None else canonical_tokens(target)
    theta = max(len(tokens), len(other))
    if theta == 0:
        return 0.0
    return _clamp(levenshtein(tokens, other) / theta)


def diversity(graph: NarrativeGraph) -> float:
    present = {node.trope.trope_class for node in graph.nodes}
    return len(present) / len(TropeClass)


def explicit_conflicts(patterns: PatternSet) -> int:
    return sum(
        1
        for inst in patterns.by_kind(PatternKind.CONFLICT)
        if not inst.fake and not inst.self_conflict
    )


def dimension_value(
    dim: str,
    graph: NarrativeGraph,
    target: NarrativeGraph | None = None,
    patterns: PatternSet | None = None,
    target_tokens: tuple[str, ...] | None = None,
) -> float:
    """Value of one behavior dimension for a graph, in [0,1]."""
    if dim not in DIMENSIONS:
        raise UnknownDimensionError(f"unknown dimension {dim!r}")
    if dim == "step":
        return step_distance(graph, target, target_tokens)
    if dim == "diversity":
        return diversity(graph)
    patterns = patterns if patterns is not None else detect_patterns(graph)
    if dim == "interestingness":
        return interestingness(graph, patterns)
    if dim == "conflicts":
        return _clamp(explicit_conflicts(patterns) / CONFLICT_SCALE)
    if dim == "plot_points":
        return _clamp(patterns.count(PatternKind.PLOT_POINT) / PLOT_SCALE)
    if dim == "plot_twists":
        return _clamp(patterns.count(PatternKind.PLOT_TWIST) / PLOT_SCALE)
    if dim == "plot_devices":
        return _clamp(patterns.count(PatternKind.ACTIVE_DEVICE) / PLOT_SCALE)
    raise UnknownDimensionError(f"unknown dimension {dim!r}")


def all_dimensions(
    graph: NarrativeGraph,
    target: NarrativeGraph,
    patterns: PatternSet | None = None,
    target_tokens: tuple[str, ...] | None = None,
) -> dict[str, float]:
    patterns = patterns if patterns is not None else detect_patterns(graph)
    values = {
        dim: dimension_value(dim, graph, target, patterns, target_tokens)
        for dim in DIMENSIONS
    }
    return values


def bucketize(value: float, granularity: int) -> int:
    """Map a ratio to a grid index; the top bucket absorbs value = 1.0."""
    return min(math.floor(value * granularity), granularity - 1)


def evaluate(
    graph: NarrativeGraph,
    *,
    target: NarrativeGraph,
    constraints: LevelConstraints | None = None,
    patterns: PatternSet | None = None,
    target_tokens: tuple[str, ...] | None = None,
) -> Evaluation:
    """Single-pass scoring of a graph against a target and optional budgets."""
    patterns = patterns if patterns is not None else detect_patterns(graph)
    cons = consistency(graph, patterns)
    coh = cohesion(graph, patterns)
    coherent = _clamp(0.5 * cons + 0.5 * coh)
    infeasible_score = infeasible_fitness(graph, patterns)
    feasible, violations = check_feasibility(graph, constraints, patterns)
    return Evaluation(
        feasible=feasible,
        fitness=coherent if feasible else infeasible_score,
        cohesion=coh,
        consistency=cons,
        coherence=coherent,
        infeasible_score=infeasible_score,
        dimensions=all_dimensions(graph, target, patterns, target_tokens),
        violations=violations,
    )
