"""Graph-grammar genotypes.

A grammar is an ordered list of production rules. Each rule rewrites one
matched occurrence of its left-hand pattern into its right-hand pattern;
the correspondence map says which lhs nodes survive (absent = delete, new
rhs nodes = additions). Recipes sequence rule applications against a target
graph to produce a phenotype. All randomness flows through an explicit rng.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random

from .errors import ValidationError
from .evaluation import Evaluation, evaluate
from .graphs import (
    EdgeKind,
    NarrativeEdge,
    NarrativeGraph,
    NarrativeNode,
    Trope,
    TropeClass,
    canonical_hash,
    canonical_tokens,
    connectivity,
)
from .patterns import detect_patterns

MAX_LHS_NODES = 4
MAX_RHS_NODES = 6
MAX_RULES = 12
MAX_STEP_REPEAT = 3
DEFAULT_RECIPES = 5

# Class wildcards for rule labels. An added rhs node with a wildcard label
# materializes as the class representative; a kept node keeps its trope.
WILDCARDS = ("ANY_HERO", "ANY_VILLAIN", "ANY_STRUCTURE", "ANY_DEVICE")
_WILDCARD_CLASS = {
    "ANY_HERO": TropeClass.HERO_CHARACTER,
    "ANY_VILLAIN": TropeClass.VILLAIN_CHARACTER,
    "ANY_STRUCTURE": TropeClass.STRUCTURE,
    "ANY_DEVICE": TropeClass.PLOT_DEVICE,
}
_CLASS_REPRESENTATIVE = {
    TropeClass.HERO_CHARACTER: Trope.HERO,
    TropeClass.VILLAIN_CHARACTER: Trope.ENEMY,
    TropeClass.STRUCTURE: Trope.CONFLICT,
    TropeClass.PLOT_DEVICE: Trope.PLD,
}
TROPE_CODES = tuple(t.value for t in Trope)

# Sampling knobs for random rules. Pair lhs patterns demand a specific edge
# and concrete labels rarely occur in a given story, so most random rules
# never fire against a target; search progress has to breed rules that do.
# Wildcard rhs labels keep the matched trope, so relabel edits only rarely
# mint the coherent whole-cast retypes that would blanket the step axis.
_PAIR_LHS_P = 0.9
_ENTAIL_P = 0.12
_LHS_WILDCARD_P = 0.05
_RHS_WILDCARD_P = 0.98
_SECOND_EDIT_P = 0.0
_ATTACH_P = 0.1
# Edits lean toward edge surgery: it barely moves the edit distance while
# wrecking or minting patterns, so offspring cluster near the target with a
# wide fitness spread. Fresh random rules almost never carry retypes or node
# removals, the ops whose rewrites shift many tokens at once; those rules only
# arise through mutation during a run, so distant graphs come from bred stacks.
_SEED_OP_WEIGHTS = {
    "add_node": 0.5,
    "remove_node": 0.02,
    "relabel": 0.0,
    "add_edge": 2.0,
    "remove_edge": 2.5,
}
_MUTATE_OP_WEIGHTS = {
    "add_node": 0.8,
    "remove_node": 0.05,
    "relabel": 0.1,
    "add_edge": 2.0,
    "remove_edge": 2.5,
}
# Recipe depth is tied to grammar size: fresh one-rule seeds barely move the
# graph, while grammars that grew long rule lists through bred insertions
# express deep rewrite chains. Distant phenotypes therefore need lineages.
_REPEAT_WEIGHTS = (0.995, 0.004, 0.001)
_RULE_COUNT_WEIGHTS = (0.7, 0.24, 0.03, 0.015, 0.01, 0.005)
_DRAW_DECAY = 0.3
_RULE_INSERT_P = 0.35


def label_is_valid(label: str) -> bool:
    return label in _WILDCARD_CLASS or label in TROPE_CODES


def label_matches(label: str, trope: Trope) -> bool:
    cls = _WILDCARD_CLASS.get(label)
    if cls is not None:
        return trope.trope_class is cls
    return trope.value == label


def resolve_label(label: str) -> Trope:
    """Concrete trope for an added node carrying this label."""
    cls = _WILDCARD_CLASS.get(label)
    if cls is not None:
        return _CLASS_REPRESENTATIVE[cls]
    return Trope(label)


_CLASS_WILDCARD = {cls: wc for wc, cls in _WILDCARD_CLASS.items()}


def _wildcard_for(label: str) -> str:
    if label in _WILDCARD_CLASS:
        return label
    return _CLASS_WILDCARD[Trope(label).trope_class]


@dataclass(frozen=True)
class RuleNode:
    id: str
    label: str

    def __post_init__(self) -> None:
        if not label_is_valid(self.label):
            raise ValidationError(f"unknown rule label {self.label!r}")


@dataclass(frozen=True)
class RuleEdge:
    src: str
    dst: str
    kind: EdgeKind

    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind.value)


@dataclass(frozen=True)
class PatternGraph:
    """Small labeled graph used as a rule side. Node order is meaningful:
    matching binds nodes in stored order."""

    nodes: tuple[RuleNode, ...] = ()
    edges: tuple[RuleEdge, ...] = ()

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise ValidationError("duplicate node ids in pattern graph")
        id_set = set(ids)
        seen = set()
        for e in self.edges:
            if e.src not in id_set or e.dst not in id_set:
                raise ValidationError(f"pattern edge {e.src!r}->{e.dst!r} dangles")
            if e.src == e.dst:
                raise ValidationError("self-loop in pattern graph")
            if e.key() in seen:
                raise ValidationError(f"duplicate pattern edge {e.key()}")
            seen.add(e.key())

    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)


@dataclass(frozen=True)
class ProductionRule:
    lhs: PatternGraph
    rhs: PatternGraph
    mapping: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not 1 <= len(self.lhs.nodes) <= MAX_LHS_NODES:
            raise ValidationError(
                f"lhs must have 1..{MAX_LHS_NODES} nodes, got {len(self.lhs.nodes)}"
            )
        if len(self.rhs.nodes) > MAX_RHS_NODES:
            raise ValidationError(
                f"rhs must have at most {MAX_RHS_NODES} nodes, got {len(self.rhs.nodes)}"
            )
        lhs_ids = set(self.lhs.node_ids())
        rhs_ids = set(self.rhs.node_ids())
        seen_l: set[str] = set()
        seen_r: set[str] = set()
        for lhs_id, rhs_id in self.mapping:
            if lhs_id not in lhs_ids:
                raise ValidationError(f"mapping references missing lhs node {lhs_id!r}")
            if rhs_id not in rhs_ids:
                raise ValidationError(f"mapping references missing rhs node {rhs_id!r}")
            if lhs_id in seen_l or rhs_id in seen_r:
                raise ValidationError("correspondence map must be injective")
            seen_l.add(lhs_id)
            seen_r.add(rhs_id)


@dataclass(frozen=True)
class GraphGrammar:
    rules: tuple[ProductionRule, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.rules) <= MAX_RULES:
            raise ValidationError(
                f"grammar must have 1..{MAX_RULES} rules, got {len(self.rules)}"
            )


@dataclass(frozen=True)
class Recipe:
    """Ordered (rule index, repetition count) plan. No index repeats."""

    steps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for index, count in self.steps:
            if index < 0:
                raise ValidationError(f"negative rule index {index}")
            if count < 1:
                raise ValidationError(f"repetition count must be >= 1, got {count}")
            if index in seen:
                raise ValidationError(f"rule index {index} appears twice")
            seen.add(index)


# -- matching and rewriting --------------------------------------------------


def match_rule(graph: NarrativeGraph, rule: ProductionRule) -> dict[str, str] | None:
    """First occurrence of the rule's lhs in canonical node order.

    Canonical order: lhs positions are filled in stored order, candidates
    tried sorted by (trope code, node id). Matching is injective and
    edge-kind preserving; extra graph edges are allowed.
    """
    lhs = rule.lhs
    positions = lhs.nodes
    ordered = sorted(graph.nodes, key=lambda n: (n.trope.value, n.id))
    # Edge constraints between a position and the earlier-bound positions.
    index_of = {node.id: i for i, node in enumerate(positions)}
    checks: list[list[tuple[int, bool, EdgeKind]]] = [[] for _ in positions]
    for edge in lhs.edges:
        si, di = index_of[edge.src], index_of[edge.dst]
        late, early, outgoing = (
            (si, di, True) if si > di else (di, si, False)
        )
        checks[late].append((early, outgoing, edge.kind))

    binding: list[str] = []
    used: set[str] = set()

    def extend(position: int) -> bool:
        if position == len(positions):
            return True
        want = positions[position].label
        for node in ordered:
            if node.id in used or not label_matches(want, node.trope):
                continue
            ok = True
            for early, outgoing, kind in checks[position]:
                if outgoing:
                    if not graph.has_edge(node.id, binding[early], kind):
                        ok = False
                        break
                elif not graph.has_edge(binding[early], node.id, kind):
                    ok = False
                    break
            if not ok:
                continue
            binding.append(node.id)
            used.add(node.id)
            if extend(position + 1):
                return True
            binding.pop()
            used.discard(node.id)
        return False

    if not extend(0):
        return None
    return {positions[i].id: binding[i] for i in range(len(positions))}


def rewrite(
    graph: NarrativeGraph, rule: ProductionRule, binding: dict[str, str]
) -> NarrativeGraph | None:
    """Rewrite one matched occurrence. None when the result would be empty.

    Semantics: matched lhs edges are consumed; unmapped lhs nodes are deleted
    with their incident edges; mapped nodes are retyped when their rhs label
    is concrete (wildcards keep the matched trope); unmapped rhs nodes are
    added with fresh ids; rhs edges are added unless already present.
    """
    mapping = dict(rule.mapping)
    rhs_labels = {n.id: n.label for n in rule.rhs.nodes}

    deleted = {binding[n.id] for n in rule.lhs.nodes if n.id not in mapping}
    consumed = {
        (binding[e.src], binding[e.dst], e.kind.value) for e in rule.lhs.edges
    }

    retypes: dict[str, Trope] = {}
    rhs_to_graph: dict[str, str] = {}
    for lhs_id, rhs_id in mapping.items():
        graph_id = binding[lhs_id]
        rhs_to_graph[rhs_id] = graph_id
        label = rhs_labels[rhs_id]
        if label not in _WILDCARD_CLASS:
            retypes[graph_id] = Trope(label)

    nodes: list[NarrativeNode] = []
    for node in graph.nodes:
        if node.id in deleted:
            continue
        trope = retypes.get(node.id, node.trope)
        nodes.append(NarrativeNode(node.id, trope) if trope is not node.trope else node)

    taken = set(graph.node_ids())
    counter = 0
    mapped_rhs = set(rhs_to_graph)
    for rnode in rule.rhs.nodes:
        if rnode.id in mapped_rhs:
            continue
        counter += 1
        fresh = f"n{counter}"
        while fresh in taken:
            counter += 1
            fresh = f"n{counter}"
        taken.add(fresh)
        rhs_to_graph[rnode.id] = fresh
        nodes.append(NarrativeNode(fresh, resolve_label(rnode.label)))

    if not nodes:
        return None

    edges: list[NarrativeEdge] = []
    edge_keys: set[tuple[str, str, str]] = set()
    for edge in graph.edges:
        key = edge.key()
        if key in consumed or edge.src in deleted or edge.dst in deleted:
            continue
        edges.append(edge)
        edge_keys.add(key)
    for redge in rule.rhs.edges:
        src = rhs_to_graph[redge.src]
        dst = rhs_to_graph[redge.dst]
        key = (src, dst, redge.kind.value)
        if key in edge_keys or src == dst:
            continue
        edges.append(NarrativeEdge(src, dst, redge.kind))
        edge_keys.add(key)

    return NarrativeGraph(nodes, edges)


def apply_rule(graph: NarrativeGraph, rule: ProductionRule) -> NarrativeGraph | None:
    """Match and rewrite once. None means the application was skipped."""
    binding = match_rule(graph, rule)
    if binding is None:
        return None
    return rewrite(graph, rule, binding)


@dataclass(frozen=True)
class RecipeApplication:
    graph: NarrativeGraph
    trace: tuple[tuple[int, bool], ...]  # (rule index, applied?) per attempt


def apply_recipe_traced(
    target: NarrativeGraph, grammar: GraphGrammar, recipe: Recipe
) -> RecipeApplication:
    for index, _ in recipe.steps:
        if index >= len(grammar.rules):
            raise ValidationError(f"recipe references missing rule {index}")
    graph = target
    trace: list[tuple[int, bool]] = []
    for index, count in recipe.steps:
        rule = grammar.rules[index]
        for _ in range(count):
            result = apply_rule(graph, rule)
            trace.append((index, result is not None))
            if result is not None:
                graph = result
    return RecipeApplication(graph=graph, trace=tuple(trace))


def apply_recipe(
    target: NarrativeGraph, grammar: GraphGrammar, recipe: Recipe
) -> NarrativeGraph:
    return apply_recipe_traced(target, grammar, recipe).graph


# -- random generation -------------------------------------------------------


def _random_label(rng: Random, wildcard_p: float) -> str:
    if rng.random() < wildcard_p:
        return rng.choice(WILDCARDS)
    return rng.choice(TROPE_CODES)


def _random_kind(rng: Random) -> EdgeKind:
    return EdgeKind.ENTAIL if rng.random() < _ENTAIL_P else EdgeKind.PLAIN


def _fresh_rule_id(taken: set[str]) -> str:
    counter = 1
    while f"x{counter}" in taken:
        counter += 1
    return f"x{counter}"


def _edit_pattern_graph(
    pg: PatternGraph,
    rng: Random,
    *,
    min_nodes: int,
    max_nodes: int,
    wildcard_p: float,
    op_weights: dict[str, float] = _MUTATE_OP_WEIGHTS,
) -> PatternGraph:
    """One atomic edit: add/remove/relabel a node, add/remove an edge."""
    nodes = list(pg.nodes)
    edges = list(pg.edges)
    missing: list[tuple[str, str, EdgeKind]] = []
    present = {e.key() for e in edges}
    for a in nodes:
        for b in nodes:
            if a.id == b.id:
                continue
            for kind in (EdgeKind.PLAIN, EdgeKind.ENTAIL):
                if (a.id, b.id, kind.value) not in present:
                    missing.append((a.id, b.id, kind))

    ops = []
    if len(nodes) < max_nodes:
        ops.append("add_node")
    if len(nodes) > min_nodes and nodes:
        ops.append("remove_node")
    if nodes:
        ops.append("relabel")
    if missing:
        ops.append("add_edge")
    if edges:
        ops.append("remove_edge")
    op = rng.choices(ops, weights=[op_weights[o] for o in ops])[0]

    if op == "add_node":
        fresh = _fresh_rule_id({n.id for n in nodes})
        # additions stick to class wildcards, keeping the add vocabulary tiny
        nodes.append(RuleNode(fresh, rng.choice(WILDCARDS)))
        # sometimes the new node stays loose, producing ragged rewrites
        if len(nodes) > 1 and rng.random() < _ATTACH_P:
            peer = rng.choice([n.id for n in nodes[:-1]])
            kind = _random_kind(rng)
            if rng.random() < 0.5:
                edges.append(RuleEdge(fresh, peer, kind))
            else:
                edges.append(RuleEdge(peer, fresh, kind))
    elif op == "remove_node":
        victim = rng.choice([n.id for n in nodes])
        nodes = [n for n in nodes if n.id != victim]
        edges = [e for e in edges if victim not in (e.src, e.dst)]
    elif op == "relabel":
        index = rng.randrange(len(nodes))
        nodes[index] = RuleNode(nodes[index].id, _random_label(rng, wildcard_p))
    elif op == "add_edge":
        src, dst, kind = rng.choice(missing)
        edges.append(RuleEdge(src, dst, kind))
    else:
        edges.remove(rng.choice(edges))

    return PatternGraph(tuple(nodes), tuple(edges))


def random_rule(rng: Random) -> ProductionRule:
    if rng.random() < _PAIR_LHS_P:
        lhs = PatternGraph(
            (
                RuleNode("a", _random_label(rng, _LHS_WILDCARD_P)),
                RuleNode("b", _random_label(rng, _LHS_WILDCARD_P)),
            ),
            (RuleEdge("a", "b", _random_kind(rng)),),
        )
    else:
        lhs = PatternGraph((RuleNode("a", _random_label(rng, _LHS_WILDCARD_P)),))
    # The rhs starts as a keep-cast copy of the lhs, so a rule rewrites exactly
    # what its edit says and a transplanted side never retypes the whole match.
    rhs = PatternGraph(
        tuple(RuleNode(n.id, _wildcard_for(n.label)) for n in lhs.nodes),
        lhs.edges,
    )
    edits = 1 + (1 if rng.random() < _SECOND_EDIT_P else 0)
    for _ in range(edits):
        rhs = _edit_pattern_graph(
            rhs, rng, min_nodes=0, max_nodes=MAX_RHS_NODES,
            wildcard_p=_RHS_WILDCARD_P, op_weights=_SEED_OP_WEIGHTS,
        )
    rhs_ids = set(rhs.node_ids())
    mapping = tuple((nid, nid) for nid in lhs.node_ids() if nid in rhs_ids)
    return ProductionRule(lhs, rhs, mapping)


def random_grammar(rng: Random) -> GraphGrammar:
    count = rng.choices(range(1, 7), weights=_RULE_COUNT_WEIGHTS)[0]
    return GraphGrammar(tuple(random_rule(rng) for _ in range(count)))


def _repeat_count(rng: Random) -> int:
    roll = rng.random()
    if roll < _REPEAT_WEIGHTS[0]:
        return 1
    if roll < _REPEAT_WEIGHTS[0] + _REPEAT_WEIGHTS[1]:
        return 2
    return MAX_STEP_REPEAT


def sample_recipe(grammar: GraphGrammar, rng: Random) -> Recipe:
    # Draw counts decay geometrically over 1..|rules|: most recipes express a
    # rule or two, and deep rewrite chains stay rare even in long grammars.
    n = len(grammar.rules)
    draws = rng.choices(range(1, n + 1), weights=[_DRAW_DECAY**i for i in range(n)])[0]
    steps: list[list[int]] = []
    position: dict[int, int] = {}
    for _ in range(draws):
        index = rng.randrange(len(grammar.rules))
        count = _repeat_count(rng)
        if index in position:
            steps[position[index]][1] += count
        else:
            position[index] = len(steps)
            steps.append([index, count])
    return Recipe(tuple((index, count) for index, count in steps))


def sample_recipes(grammar: GraphGrammar, n: int, rng: Random) -> list[Recipe]:
    return [sample_recipe(grammar, rng) for _ in range(n)]


# -- variation ---------------------------------------------------------------


def _repair_mapping(
    mapping: tuple[tuple[str, str], ...], lhs: PatternGraph, rhs: PatternGraph
) -> tuple[tuple[str, str], ...]:
    lhs_ids = set(lhs.node_ids())
    rhs_ids = set(rhs.node_ids())
    return tuple(
        (l, r) for l, r in mapping if l in lhs_ids and r in rhs_ids
    )


def _with_lhs(rule: ProductionRule, lhs: PatternGraph) -> ProductionRule:
    return ProductionRule(lhs, rule.rhs, _repair_mapping(rule.mapping, lhs, rule.rhs))


def _with_rhs(rule: ProductionRule, rhs: PatternGraph) -> ProductionRule:
    return ProductionRule(rule.lhs, rhs, _repair_mapping(rule.mapping, rule.lhs, rhs))


def crossover(
    a: GraphGrammar, b: GraphGrammar, rng: Random
) -> tuple[GraphGrammar, GraphGrammar]:
    """Exchange one rule side between the parents."""
    ia = rng.randrange(len(a.rules))
    ib = rng.randrange(len(b.rules))
    rule_a, rule_b = a.rules[ia], b.rules[ib]
    if rng.random() < 0.5:
        new_a, new_b = _with_lhs(rule_a, rule_b.lhs), _with_lhs(rule_b, rule_a.lhs)
    else:
        new_a, new_b = _with_rhs(rule_a, rule_b.rhs), _with_rhs(rule_b, rule_a.rhs)
    rules_a = list(a.rules)
    rules_b = list(b.rules)
    rules_a[ia] = new_a
    rules_b[ib] = new_b
    return (GraphGrammar(tuple(rules_a)), GraphGrammar(tuple(rules_b)))


def mutate(grammar: GraphGrammar, rng: Random) -> GraphGrammar:
    """10% structural (add/remove a rule), 90% one atomic edit to one rule."""
    rules = list(grammar.rules)
    if rng.random() < 0.1:
        # deletions outweigh insertions, so long grammars stay earned: they
        # survive only when their extra rules win cells faster than drift
        # strips them back down
        add = rng.random() < _RULE_INSERT_P
        if add and len(rules) >= MAX_RULES:
            add = False
        elif not add and len(rules) <= 1:
            add = True
        if add:
            rules.insert(rng.randrange(len(rules) + 1), random_rule(rng))
        else:
            del rules[rng.randrange(len(rules))]
        return GraphGrammar(tuple(rules))

    index = rng.randrange(len(rules))
    rule = rules[index]
    if rng.random() < 0.5:
        lhs = _edit_pattern_graph(
            rule.lhs, rng, min_nodes=1, max_nodes=MAX_LHS_NODES,
            wildcard_p=_LHS_WILDCARD_P,
        )
        rules[index] = _with_lhs(rule, lhs)
    else:
        rhs = _edit_pattern_graph(
            rule.rhs, rng, min_nodes=0, max_nodes=MAX_RHS_NODES,
            wildcard_p=_RHS_WILDCARD_P,
        )
        rules[index] = _with_rhs(rule, rhs)
    return GraphGrammar(tuple(rules))


# -- individuals --------------------------------------------------------------


def identity_grammar() -> GraphGrammar:
    """A grammar whose only rule matches any hero and keeps it unchanged."""
    node = RuleNode("a", "ANY_HERO")
    side = PatternGraph((node,))
    return GraphGrammar((ProductionRule(side, side, (("a", "a"),)),))


@dataclass(frozen=True)
class PhenotypeStats:
    """Cheap facts needed to re-derive feasibility when budgets change."""

    connected: bool
    multi_self_conflict: bool
    heroes: int
    villains: int
    devices: int


@dataclass(frozen=True)
class Individual:
    grammar: GraphGrammar
    best_recipe: Recipe
    phenotype: NarrativeGraph
    evaluation: Evaluation
    digest: str
    tokens: tuple[str, ...]
    stats: PhenotypeStats
    seq: int = 0


def _phenotype_stats(graph: NarrativeGraph, patterns) -> PhenotypeStats:
    connected, _ = connectivity(graph)
    heroes = villains = devices = 0
    for node in graph.nodes:
        cls = node.trope.trope_class
        if cls is TropeClass.HERO_CHARACTER:
            heroes += 1
        elif cls is TropeClass.VILLAIN_CHARACTER:
            villains += 1
        elif cls is TropeClass.PLOT_DEVICE:
            devices += 1
    multi = any(c > 1 for c in patterns.self_conflict_counts().values())
    return PhenotypeStats(connected, multi, heroes, villains, devices)


def build_individual(
    grammar: GraphGrammar,
    target: NarrativeGraph,
    rng: Random,
    *,
    constraints=None,
    recipe_count: int = DEFAULT_RECIPES,
    target_tokens: tuple[str, ...] | None = None,
    target_digest: str | None = None,
) -> Individual:
    """Sample recipes, evaluate each, and keep the strongest phenotype.

    A rewritten phenotype always outranks an untouched copy of the target
    (the target itself is archived separately), fitness breaks the rest.
    """
    if target_tokens is None:
        target_tokens = canonical_tokens(target)
    if target_digest is None:
        target_digest = canonical_hash(target)
    best = None
    best_key = None
    for recipe in sample_recipes(grammar, recipe_count, rng):
        graph = apply_recipe(target, grammar, recipe)
        patterns = detect_patterns(graph)
        ev = evaluate(
            graph,
            target=target,
            constraints=constraints,
            patterns=patterns,
            target_tokens=target_tokens,
        )
        digest = canonical_hash(graph)
        key = (digest != target_digest, ev.fitness)
        if best_key is None or key > best_key:
            best_key = key
            best = (recipe, graph, ev, digest, patterns)
    recipe, graph, ev, digest, patterns = best
    return Individual(
        grammar=grammar,
        best_recipe=recipe,
        phenotype=graph,
        evaluation=ev,
        digest=digest,
        tokens=canonical_tokens(graph),
        stats=_phenotype_stats(graph, patterns),
    )


def identity_individual(
    target: NarrativeGraph,
    *,
    constraints=None,
    target_tokens: tuple[str, ...] | None = None,
) -> Individual:
    """The target graph itself, wrapped as an archive member."""
    patterns = detect_patterns(target)
    ev = evaluate(
        target,
        target=target,
        constraints=constraints,
        patterns=patterns,
        target_tokens=target_tokens,
    )
    return Individual(
        grammar=identity_grammar(),
        best_recipe=Recipe(()),
        phenotype=target,
        evaluation=ev,
        digest=canonical_hash(target),
        tokens=canonical_tokens(target),
        stats=_phenotype_stats(target, patterns),
    )


# -- documents ----------------------------------------------------------------


def pattern_graph_to_document(pg: PatternGraph) -> dict:
    return {
        "nodes": [{"id": n.id, "label": n.label} for n in pg.nodes],
        "edges": [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value} for e in pg.edges
        ],
    }


def pattern_graph_from_document(doc: dict) -> PatternGraph:
    return PatternGraph(
        tuple(RuleNode(n["id"], n["label"]) for n in doc.get("nodes", [])),
        tuple(
            RuleEdge(e["src"], e["dst"], EdgeKind(e["kind"]))
            for e in doc.get("edges", [])
        ),
    )


def grammar_to_document(grammar: GraphGrammar) -> dict:
    return {
        "rules": [
            {
                "lhs": pattern_graph_to_document(rule.lhs),
                "rhs": pattern_graph_to_document(rule.rhs),
                "mapping": [[l, r] for l, r in rule.mapping],
            }
            for rule in grammar.rules
        ]
    }


def grammar_from_document(doc: dict) -> GraphGrammar:
    return GraphGrammar(
        tuple(
            ProductionRule(
                pattern_graph_from_document(rule["lhs"]),
                pattern_graph_from_document(rule["rhs"]),
                tuple((l, r) for l, r in rule.get("mapping", [])),
            )
            for rule in doc["rules"]
        )
    )


def recipe_to_document(recipe: Recipe) -> list:
    return [[index, count] for index, count in recipe.steps]


def recipe_from_document(doc: list) -> Recipe:
    return Recipe(tuple((index, count) for index, count in doc))
