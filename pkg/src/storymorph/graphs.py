"""Trope-based narrative graphs.

Nodes carry a trope drawn from a fixed vocabulary, edges are typed and
directed. Graphs are immutable: every editing operation returns a fresh
instance. Identity for search purposes is the canonical token sequence
(sorted trope codes, then sorted edge descriptors), which also feeds the
structural edit distance and the content hash.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .errors import (
    DuplicateEdgeError,
    IntegrityError,
    NotFoundError,
    ParseError,
    ValidationError,
)


class TropeClass(Enum):
    HERO_CHARACTER = "hero-character"
    VILLAIN_CHARACTER = "villain-character"
    STRUCTURE = "structure"
    PLOT_DEVICE = "plot-device"


class Trope(Enum):
    # hero characters
    HERO = "HERO"
    NEO = "NEO"
    SH = "SH"
    # villain characters
    ENEMY = "ENEMY"
    BAD = "BAD"
    DRA = "DRA"
    EMP = "EMP"
    # structure
    CONFLICT = "CONFLICT"
    # plot devices
    PLD = "PLD"
    MCG = "MCG"

    @property
    def trope_class(self) -> TropeClass:
        return _TROPE_CLASS[self]

    @property
    def is_character(self) -> bool:
        return _TROPE_CLASS[self] in CHARACTER_CLASSES


_TROPE_CLASS: dict[Trope, TropeClass] = {
    Trope.HERO: TropeClass.HERO_CHARACTER,
    Trope.NEO: TropeClass.HERO_CHARACTER,
    Trope.SH: TropeClass.HERO_CHARACTER,
    Trope.ENEMY: TropeClass.VILLAIN_CHARACTER,
    Trope.BAD: TropeClass.VILLAIN_CHARACTER,
    Trope.DRA: TropeClass.VILLAIN_CHARACTER,
    Trope.EMP: TropeClass.VILLAIN_CHARACTER,
    Trope.CONFLICT: TropeClass.STRUCTURE,
    Trope.PLD: TropeClass.PLOT_DEVICE,
    Trope.MCG: TropeClass.PLOT_DEVICE,
}

CHARACTER_CLASSES = frozenset(
    {TropeClass.HERO_CHARACTER, TropeClass.VILLAIN_CHARACTER}
)


class EdgeKind(Enum):
    PLAIN = "PLAIN"
    ENTAIL = "ENTAIL"


@dataclass(frozen=True)
class NarrativeNode:
    id: str
    trope: Trope


@dataclass(frozen=True)
class NarrativeEdge:
    src: str
    dst: str
    kind: EdgeKind

    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind.value)


@dataclass(frozen=True)
class LevelConstraints:
    """Budgets on character and item counts for a generated level."""

    heroes: int
    enemies: int
    quest_items: int

    def __post_init__(self) -> None:
        for field in ("heroes", "enemies", "quest_items"):
            value = getattr(self, field)
            if not isinstance(value, int) or value < 0:
                raise ValidationError(f"constraint {field} must be a non-negative int")


class NarrativeGraph:
    """Immutable directed graph of trope nodes and typed edges.

    Invariants enforced at construction: at least one node, unique node ids,
    no self-loop edges, no duplicate (src, dst, kind) edges, edges only
    between existing nodes.
    """

    __slots__ = ("_nodes", "_edges", "_edge_keys", "_out", "_in", "_tokens", "_digest")

    def __init__(
        self,
        nodes: Iterable[NarrativeNode],
        edges: Iterable[NarrativeEdge] = (),
    ):
        node_map: dict[str, NarrativeNode] = {}
        for node in nodes:
            if node.id in node_map:
                raise ValidationError(f"duplicate node id {node.id!r}")
            node_map[node.id] = node
        if not node_map:
            raise ValidationError("a narrative graph needs at least one node")

        out: dict[str, list[NarrativeEdge]] = {nid: [] for nid in node_map}
        inc: dict[str, list[NarrativeEdge]] = {nid: [] for nid in node_map}
        edge_list: list[NarrativeEdge] = []
        edge_keys: set[tuple[str, str, str]] = set()
        for edge in edges:
            if edge.src not in node_map or edge.dst not in node_map:
                raise IntegrityError(
                    f"edge {edge.src!r}->{edge.dst!r} references a missing node"
                )
            if edge.src == edge.dst:
                raise ValidationError(f"self-loop edge on {edge.src!r} is not allowed")
            key = edge.key()
            if key in edge_keys:
                raise DuplicateEdgeError(
                    f"duplicate edge {edge.src!r}-{edge.kind.value}->{edge.dst!r}"
                )
            edge_keys.add(key)
            edge_list.append(edge)
            out[edge.src].append(edge)
            inc[edge.dst].append(edge)

        self._nodes = node_map
        self._edges = tuple(edge_list)
        self._edge_keys = edge_keys
        self._out = out
        self._in = inc
        self._tokens: tuple[str, ...] | None = None
        self._digest: str | None = None

    # -- access -----------------------------------------------------------

    @property
    def nodes(self) -> tuple[NarrativeNode, ...]:
        return tuple(self._nodes.values())

    @property
    def edges(self) -> tuple[NarrativeEdge, ...]:
        return self._edges

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def node_ids(self) -> tuple[str, ...]:
        return tuple(self._nodes)

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def trope(self, node_id: str) -> Trope:
        try:
            return self._nodes[node_id].trope
        except KeyError:
            raise NotFoundError(f"no node {node_id!r}") from None

    def has_edge(self, src: str, dst: str, kind: EdgeKind) -> bool:
        return (src, dst, kind.value) in self._edge_keys

    def out_edges(self, node_id: str) -> tuple[NarrativeEdge, ...]:
        try:
            return tuple(self._out[node_id])
        except KeyError:
            raise NotFoundError(f"no node {node_id!r}") from None

    def in_edges(self, node_id: str) -> tuple[NarrativeEdge, ...]:
        try:
            return tuple(self._in[node_id])
        except KeyError:
            raise NotFoundError(f"no node {node_id!r}") from None

    def degree(self, node_id: str) -> int:
        return len(self._out[node_id]) + len(self._in[node_id])

    def __iter__(self) -> Iterator[NarrativeNode]:
        return iter(self._nodes.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NarrativeGraph):
            return NotImplemented
        if len(self._nodes) != len(other._nodes):
            return False
        for nid, node in self._nodes.items():
            peer = other._nodes.get(nid)
            if peer is None or peer.trope is not node.trope:
                return False
        return self._edge_keys == other._edge_keys

    def __repr__(self) -> str:
        return f"NarrativeGraph({self.node_count} nodes, {self.edge_count} edges)"

    # -- editing (returns new graphs) --------------------------------------

    def with_node(self, node_id: str, trope: Trope) -> "NarrativeGraph":
        if node_id in self._nodes:
            raise ValidationError(f"duplicate node id {node_id!r}")
        return NarrativeGraph(
            list(self._nodes.values()) + [NarrativeNode(node_id, trope)], self._edges
        )

    def without_node(self, node_id: str) -> "NarrativeGraph":
        if node_id not in self._nodes:
            raise NotFoundError(f"no node {node_id!r}")
        if len(self._nodes) == 1:
            raise ValidationError("cannot remove the last node")
        nodes = [n for n in self._nodes.values() if n.id != node_id]
        edges = [e for e in self._edges if node_id not in (e.src, e.dst)]
        return NarrativeGraph(nodes, edges)

    def with_edge(self, src: str, dst: str, kind: EdgeKind) -> "NarrativeGraph":
        for end in (src, dst):
            if end not in self._nodes:
                raise NotFoundError(f"no node {end!r}")
        if src == dst:
            raise ValidationError(f"self-loop edge on {src!r} is not allowed")
        if self.has_edge(src, dst, kind):
            raise DuplicateEdgeError(f"duplicate edge {src!r}-{kind.value}->{dst!r}")
        return NarrativeGraph(
            self._nodes.values(), list(self._edges) + [NarrativeEdge(src, dst, kind)]
        )

    def without_edge(self, src: str, dst: str, kind: EdgeKind) -> "NarrativeGraph":
        if not self.has_edge(src, dst, kind):
            raise NotFoundError(f"no edge {src!r}-{kind.value}->{dst!r}")
        edges = [e for e in self._edges if e.key() != (src, dst, kind.value)]
        return NarrativeGraph(self._nodes.values(), edges)

    def with_retyped(self, node_id: str, trope: Trope) -> "NarrativeGraph":
        if node_id not in self._nodes:
            raise NotFoundError(f"no node {node_id!r}")
        nodes = [
            NarrativeNode(n.id, trope) if n.id == node_id else n
            for n in self._nodes.values()
        ]
        return NarrativeGraph(nodes, self._edges)


GRAPH_OPS = ("add_node", "remove_node", "add_edge", "remove_edge", "retype_node")


def mutate_graph(graph: NarrativeGraph, op: str, **params: object) -> NarrativeGraph:
    """Apply one named edit operation and return the edited graph.

    Ops: add_node(trope, id=auto), remove_node(id), add_edge(src, dst, kind),
    remove_edge(src, dst, kind), retype_node(id, trope).
    """
    if op == "add_node":
        node_id = params.get("id") or fresh_node_id(graph)
        return graph.with_node(str(node_id), _as_trope(params["trope"]))
    if op == "remove_node":
        return graph.without_node(str(params["id"]))
    if op == "add_edge":
        return graph.with_edge(
            str(params["src"]), str(params["dst"]), _as_kind(params["kind"])
        )
    if op == "remove_edge":
        return graph.without_edge(
            str(params["src"]), str(params["dst"]), _as_kind(params["kind"])
        )
    if op == "retype_node":
        return graph.with_retyped(str(params["id"]), _as_trope(params["trope"]))
    raise ValueError(f"unknown graph op {op!r}")


def _as_trope(value: object) -> Trope:
    if isinstance(value, Trope):
        return value
    try:
        return Trope(str(value))
    except ValueError:
        raise ValidationError(f"unknown trope code {value!r}") from None


def _as_kind(value: object) -> EdgeKind:
    if isinstance(value, EdgeKind):
        return value
    try:
        return EdgeKind(str(value))
    except ValueError:
        raise ValidationError(f"unknown edge kind {value!r}") from None


_ID_PATTERN = re.compile(r"^n(\d+)$")


def fresh_node_id(graph: NarrativeGraph, prefix: str = "n") -> str:
    """Deterministic unused node id: one past the highest numeric suffix."""
    pattern = re.compile(rf"^{re.escape(prefix)}(\d+)$")
    highest = 0
    for nid in graph.node_ids():
        m = pattern.match(nid)
        if m:
            highest = max(highest, int(m.group(1)))
    return f"{prefix}{highest + 1}"


def default_graph() -> NarrativeGraph:
    """Minimal coherent story: a hero opposes an enemy through one conflict."""
    return NarrativeGraph(
        [
            NarrativeNode("hero", Trope.HERO),
            NarrativeNode("conflict", Trope.CONFLICT),
            NarrativeNode("enemy", Trope.ENEMY),
        ],
        [
            NarrativeEdge("hero", "conflict", EdgeKind.PLAIN),
            NarrativeEdge("conflict", "enemy", EdgeKind.PLAIN),
        ],
    )


def connectivity(graph: NarrativeGraph) -> tuple[bool, float]:
    """(fully connected?, largest weakly-connected component / node count)."""
    ids = graph.node_ids()
    unseen = set(ids)
    largest = 0
    while unseen:
        start = next(iter(unseen))
        stack = [start]
        unseen.discard(start)
        size = 0
        while stack:
            nid = stack.pop()
            size += 1
            for edge in graph.out_edges(nid):
                if edge.dst in unseen:
                    unseen.discard(edge.dst)
                    stack.append(edge.dst)
            for edge in graph.in_edges(nid):
                if edge.src in unseen:
                    unseen.discard(edge.src)
                    stack.append(edge.src)
        largest = max(largest, size)
        if largest == len(ids):
            break
    fraction = largest / len(ids)
    return (largest == len(ids), fraction)


def canonical_tokens(graph: NarrativeGraph) -> tuple[str, ...]:
    """Sorted node trope codes followed by sorted edge descriptors."""
    cached = graph._tokens
    if cached is not None:
        return cached
    node_tokens = sorted(node.trope.value for node in graph.nodes)
    edge_tokens = sorted(
        f"{graph.trope(e.src).value}-{e.kind.value}->{graph.trope(e.dst).value}"
        for e in graph.edges
    )
    tokens = tuple(sys.intern(t) for t in node_tokens + edge_tokens)
    graph._tokens = tokens
    return tokens


def levenshtein(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    """Plain Levenshtein distance between two token sequences."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, token_a in enumerate(a, start=1):
        current = [i]
        for j, token_b in enumerate(b, start=1):
            cost = 0 if token_a == token_b else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def edit_distance(a: NarrativeGraph, b: NarrativeGraph) -> int:
    """Levenshtein distance between canonical token sequences."""
    return levenshtein(canonical_tokens(a), canonical_tokens(b))


def canonical_hash(graph: NarrativeGraph) -> str:
    """sha256 hex digest of the canonical token sequence."""
    cached = graph._digest
    if cached is not None:
        return cached
    digest = hashlib.sha256(
        "\n".join(canonical_tokens(graph)).encode("utf-8")
    ).hexdigest()
    graph._digest = digest
    return digest


# -- serialization ---------------------------------------------------------


def serialize(graph: NarrativeGraph) -> dict:
    """Graph document: stable key order, nodes by id, edges by (src, dst, kind)."""
    return {
        "nodes": [
            {"id": node.id, "trope": node.trope.value}
            for node in sorted(graph.nodes, key=lambda n: n.id)
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value}
            for e in sorted(graph.edges, key=lambda e: e.key())
        ],
    }


def dumps(graph: NarrativeGraph) -> str:
    return json.dumps(serialize(graph), indent=2) + "\n"


def deserialize(document: Mapping) -> NarrativeGraph:
    """Parse a graph document. ParseError for malformed fields (with a
    location), IntegrityError for dangling edge endpoints."""
    if not isinstance(document, Mapping):
        raise ParseError("expected an object", "$")
    raw_nodes = document.get("nodes")
    if not isinstance(raw_nodes, list):
        raise ParseError("expected a list", "nodes")
    raw_edges = document.get("edges", [])
    if not isinstance(raw_edges, list):
        raise ParseError("expected a list", "edges")

    nodes: list[NarrativeNode] = []
    for i, item in enumerate(raw_nodes):
        if not isinstance(item, Mapping):
            raise ParseError("expected an object", f"nodes[{i}]")
        node_id = item.get("id")
        if not isinstance(node_id, str) or not node_id:
            raise ParseError("expected a non-empty string", f"nodes[{i}].id")
        code = item.get("trope")
        try:
            trope = Trope(code)
        except ValueError:
            raise ParseError(f"unknown trope code {code!r}", f"nodes[{i}].trope") from None
        nodes.append(NarrativeNode(node_id, trope))

    edges: list[NarrativeEdge] = []
    node_ids = {n.id for n in nodes}
    for i, item in enumerate(raw_edges):
        if not isinstance(item, Mapping):
            raise ParseError("expected an object", f"edges[{i}]")
        src = item.get("src")
        dst = item.get("dst")
        if not isinstance(src, str) or not src:
            raise ParseError("expected a non-empty string", f"edges[{i}].src")
        if not isinstance(dst, str) or not dst:
            raise ParseError("expected a non-empty string", f"edges[{i}].dst")
        code = item.get("kind")
        try:
            kind = EdgeKind(code)
        except ValueError:
            raise ParseError(f"unknown edge kind {code!r}", f"edges[{i}].kind") from None
        if src not in node_ids or dst not in node_ids:
            raise IntegrityError(
                f"edges[{i}] references a missing node ({src!r}->{dst!r})"
            )
        edges.append(NarrativeEdge(src, dst, kind))

    return NarrativeGraph(nodes, edges)


def loads(text: str) -> NarrativeGraph:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return deserialize(document)
