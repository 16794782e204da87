"""Narrative pattern detection.

Three tiers of patterns are read off a graph:

* micro: one per node, keyed by trope class (structure, character, device);
* meso: multi-node story shapes (conflicts, derivation chains, reveals,
  activated devices, plot points, plot twists);
* auxiliary: nodes and edges no meso pattern touches.

A node or edge is "in" a meso pattern when it appears among that pattern's
anchors. Auxiliary membership is the complement of meso membership, which
makes the two mutually exclusive by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .graphs import (
    CHARACTER_CLASSES,
    EdgeKind,
    NarrativeEdge,
    NarrativeGraph,
    Trope,
    TropeClass,
)


class PatternKind(Enum):
    # micro
    STRUCTURE = "SP"
    CHARACTER = "CP"
    PLOT_DEVICE = "PDP"
    # meso
    CONFLICT = "ConfP"
    DERIVATION = "DerP"
    REVEAL = "RevP"
    ACTIVE_DEVICE = "APD"
    PLOT_POINT = "PP"
    PLOT_TWIST = "PT"
    # auxiliary
    NOTHING = "Nothing"
    BROKEN_LINK = "BrokenLink"


MICRO_KINDS = frozenset(
    {PatternKind.STRUCTURE, PatternKind.CHARACTER, PatternKind.PLOT_DEVICE}
)
MESO_KINDS = frozenset(
    {
        PatternKind.CONFLICT,
        PatternKind.DERIVATION,
        PatternKind.REVEAL,
        PatternKind.ACTIVE_DEVICE,
        PatternKind.PLOT_POINT,
        PatternKind.PLOT_TWIST,
    }
)
AUX_KINDS = frozenset({PatternKind.NOTHING, PatternKind.BROKEN_LINK})

_KIND_ORDER = {kind: i for i, kind in enumerate(PatternKind)}

_MICRO_FOR_CLASS = {
    TropeClass.STRUCTURE: PatternKind.STRUCTURE,
    TropeClass.HERO_CHARACTER: PatternKind.CHARACTER,
    TropeClass.VILLAIN_CHARACTER: PatternKind.CHARACTER,
    TropeClass.PLOT_DEVICE: PatternKind.PLOT_DEVICE,
}


@dataclass(frozen=True)
class PatternInstance:
    kind: PatternKind
    anchor_nodes: tuple[str, ...]
    anchor_edges: tuple[NarrativeEdge, ...] = ()
    quality: float = 1.0
    self_conflict: bool = False
    fake: bool = False

    def sort_key(self) -> tuple:
        return (
            _KIND_ORDER[self.kind],
            self.anchor_nodes,
            tuple(e.key() for e in self.anchor_edges),
        )


@dataclass(frozen=True)
class PatternSet:
    """All pattern instances of one graph, in canonical order."""

    instances: tuple[PatternInstance, ...]
    meso_nodes: frozenset[str] = field(default_factory=frozenset)
    meso_edges: frozenset[tuple[str, str, str]] = field(default_factory=frozenset)

    def by_kind(self, kind: PatternKind) -> tuple[PatternInstance, ...]:
        return tuple(i for i in self.instances if i.kind is kind)

    def count(self, kind: PatternKind) -> int:
        return sum(1 for i in self.instances if i.kind is kind)

    def counts(self) -> dict[str, int]:
        table = {kind.value: 0 for kind in PatternKind}
        for inst in self.instances:
            table[inst.kind.value] += 1
        return table

    def micro(self) -> tuple[PatternInstance, ...]:
        return tuple(i for i in self.instances if i.kind in MICRO_KINDS)

    def auxiliary_count(self) -> int:
        return sum(1 for i in self.instances if i.kind in AUX_KINDS)

    def self_conflict_counts(self) -> dict[str, int]:
        """Self-conflict pattern count per party node."""
        table: dict[str, int] = {}
        for inst in self.instances:
            if inst.kind is PatternKind.CONFLICT and inst.self_conflict:
                party = inst.anchor_nodes[0]
                table[party] = table.get(party, 0) + 1
        return table


def detect_patterns(graph: NarrativeGraph) -> PatternSet:
    """Detect every pattern instance in one pass over the graph."""
    instances: list[PatternInstance] = []
    meso_nodes: set[str] = set()
    meso_edges: set[tuple[str, str, str]] = set()

    def add_meso(inst: PatternInstance) -> None:
        instances.append(inst)
        meso_nodes.update(inst.anchor_nodes)
        meso_edges.update(e.key() for e in inst.anchor_edges)

    # Reveals first: conflict instances need them to spot fakes.
    revealed_pairs: set[frozenset[str]] = set()
    reveal_sources: set[str] = set()
    for edge in graph.edges:
        if edge.kind is not EdgeKind.PLAIN:
            continue
        if (
            graph.trope(edge.src).trope_class in CHARACTER_CLASSES
            and graph.trope(edge.dst).trope_class in CHARACTER_CLASSES
        ):
            add_meso(
                PatternInstance(
                    PatternKind.REVEAL,
                    anchor_nodes=(edge.src, edge.dst),
                    anchor_edges=(edge,),
                )
            )
            revealed_pairs.add(frozenset((edge.src, edge.dst)))
            reveal_sources.add(edge.src)

    # Conflicts: party -> CONFLICT -> party over PLAIN edges.
    for node in graph.nodes:
        if node.trope is not Trope.CONFLICT:
            continue
        sources = [
            e
            for e in graph.in_edges(node.id)
            if e.kind is EdgeKind.PLAIN and graph.trope(e.src) is not Trope.CONFLICT
        ]
        targets = [
            e
            for e in graph.out_edges(node.id)
            if e.kind is EdgeKind.PLAIN and graph.trope(e.dst) is not Trope.CONFLICT
        ]
        for e_in in sources:
            for e_out in targets:
                is_self = e_in.src == e_out.dst
                is_fake = (
                    not is_self
                    and frozenset((e_in.src, e_out.dst)) in revealed_pairs
                )
                add_meso(
                    PatternInstance(
                        PatternKind.CONFLICT,
                        anchor_nodes=(e_in.src, node.id, e_out.dst),
                        anchor_edges=(e_in, e_out),
                        quality=0.0 if is_fake else 1.0,
                        self_conflict=is_self,
                        fake=is_fake,
                    )
                )

    # Derivation chains: ENTAIL trees read from their roots.
    entail_out: dict[str, list[NarrativeEdge]] = {}
    entail_in_degree: dict[str, int] = {}
    for edge in graph.edges:
        if edge.kind is EdgeKind.ENTAIL:
            entail_out.setdefault(edge.src, []).append(edge)
            entail_in_degree[edge.dst] = entail_in_degree.get(edge.dst, 0) + 1
    roots = sorted(
        nid for nid in entail_out if entail_in_degree.get(nid, 0) == 0
    )
    derived_from: dict[str, set[str]] = {}  # derivative -> chain roots
    for root in roots:
        reached: set[str] = set()
        stack = [root]
        while stack:
            nid = stack.pop()
            for edge in entail_out.get(nid, ()):
                if edge.dst not in reached and edge.dst != root:
                    reached.add(edge.dst)
                    stack.append(edge.dst)
        chain_edges = tuple(
            sorted(
                (
                    e
                    for e in graph.edges
                    if e.kind is EdgeKind.ENTAIL
                    and (e.src == root or e.src in reached)
                    and e.dst in reached
                ),
                key=lambda e: e.key(),
            )
        )
        derivatives = tuple(sorted(reached))
        for nid in derivatives:
            derived_from.setdefault(nid, set()).add(root)
        add_meso(
            PatternInstance(
                PatternKind.DERIVATION,
                anchor_nodes=(root,) + derivatives,
                anchor_edges=chain_edges,
            )
        )

    # Activated plot devices: a device something non-device points at.
    active_devices: set[str] = set()
    for node in graph.nodes:
        if node.trope.trope_class is not TropeClass.PLOT_DEVICE:
            continue
        triggers = tuple(
            sorted(
                (
                    e
                    for e in graph.in_edges(node.id)
                    if graph.trope(e.src).trope_class is not TropeClass.PLOT_DEVICE
                ),
                key=lambda e: e.key(),
            )
        )
        if not triggers:
            continue
        active_devices.add(node.id)
        entailed = any(e.kind is EdgeKind.ENTAIL for e in triggers)
        add_meso(
            PatternInstance(
                PatternKind.ACTIVE_DEVICE,
                anchor_nodes=(node.id,),
                anchor_edges=triggers,
                quality=1.0 if entailed else 0.5,
            )
        )

    # Plot twists: character derivative opposing a character chain root.
    twist_nodes: set[str] = set()
    for nid, chain_roots in derived_from.items():
        node_class = graph.trope(nid).trope_class
        if node_class not in CHARACTER_CLASSES:
            continue
        for root in chain_roots:
            root_class = graph.trope(root).trope_class
            if root_class in CHARACTER_CLASSES and root_class is not node_class:
                twist_nodes.add(nid)
                break

    # Plot points: derivatives, reveal sources and activated devices.
    point_nodes = set(derived_from) | reveal_sources | active_devices
    for nid in sorted(point_nodes):
        add_meso(
            PatternInstance(
                PatternKind.PLOT_POINT,
                anchor_nodes=(nid,),
                quality=1.0 if nid in twist_nodes else 0.0,
            )
        )
    for nid in sorted(twist_nodes):
        add_meso(PatternInstance(PatternKind.PLOT_TWIST, anchor_nodes=(nid,)))

    # Micro: one per node, quality from meso participation.
    for node in graph.nodes:
        kind = _MICRO_FOR_CLASS[node.trope.trope_class]
        if node.id in meso_nodes:
            quality = 1.0
        elif graph.degree(node.id) > 0:
            quality = 0.5
        else:
            quality = 0.0
        instances.append(
            PatternInstance(kind, anchor_nodes=(node.id,), quality=quality)
        )

    # Auxiliary: whatever no meso pattern touched.
    for node in graph.nodes:
        if node.id not in meso_nodes:
            instances.append(
                PatternInstance(
                    PatternKind.NOTHING, anchor_nodes=(node.id,), quality=0.0
                )
            )
    for edge in graph.edges:
        if edge.key() not in meso_edges:
            instances.append(
                PatternInstance(
                    PatternKind.BROKEN_LINK,
                    anchor_nodes=(),
                    anchor_edges=(edge,),
                    quality=0.0,
                )
            )

    instances.sort(key=PatternInstance.sort_key)
    return PatternSet(
        instances=tuple(instances),
        meso_nodes=frozenset(meso_nodes),
        meso_edges=frozenset(meso_edges),
    )


def instance_quality(
    inst: PatternInstance, graph: NarrativeGraph, patterns: PatternSet
) -> float:
    """Recompute the quality of one instance against its pattern set."""
    if inst.kind in MICRO_KINDS:
        nid = inst.anchor_nodes[0]
        if nid in patterns.meso_nodes:
            return 1.0
        return 0.5 if graph.degree(nid) > 0 else 0.0
    if inst.kind is PatternKind.CONFLICT:
        return 0.0 if inst.fake else 1.0
    if inst.kind is PatternKind.ACTIVE_DEVICE:
        entailed = any(e.kind is EdgeKind.ENTAIL for e in inst.anchor_edges)
        return 1.0 if entailed else 0.5
    if inst.kind is PatternKind.PLOT_POINT:
        twists = {
            t.anchor_nodes[0] for t in patterns.by_kind(PatternKind.PLOT_TWIST)
        }
        return 1.0 if inst.anchor_nodes[0] in twists else 0.0
    if inst.kind in AUX_KINDS:
        return 0.0
    return 1.0
