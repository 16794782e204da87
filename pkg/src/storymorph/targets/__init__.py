"""Built-in target graphs for the four benchmark experiments.

The graphs are frozen as data files so their structure cannot drift:
  1    Super Mario Bros. overview: two heroes, a captor villain whose
       defeat entails the rescue, and a decoy conflict.
  2    A Link to the Past palace: a hero goal item gated behind an
       enemy-to-boss derivation chain.
  3    Ocarina of Time overview: one goal item that entails a new hero,
       plus three conflicts against a single boss.
  4.1  Hero/conflict/enemy starter chain, then four design steps:
  4.2    the enemy becomes a boss,
  4.3    the hero gains a goal item,
  4.4    a side conflict with a lesser enemy appears,
  4.5    the lesser enemy is wired into the goal item by entailment.
"""

from importlib import resources

from ..errors import NotFoundError
from ..graphs import LevelConstraints, NarrativeGraph, loads

_FILES = {
    "1": "exp1.graph.json",
    "2": "exp2.graph.json",
    "3": "exp3.graph.json",
    "4.1": "exp4_1.graph.json",
    "4.2": "exp4_2.graph.json",
    "4.3": "exp4_3.graph.json",
    "4.4": "exp4_4.graph.json",
    "4.5": "exp4_5.graph.json",
}

_BUDGETS = {
    "1": LevelConstraints(heroes=2, enemies=2, quest_items=2),
    "2": LevelConstraints(heroes=2, enemies=2, quest_items=3),
    "3": LevelConstraints(heroes=4, enemies=1, quest_items=1),
    "4": LevelConstraints(heroes=2, enemies=2, quest_items=2),
}

TARGET_IDS = tuple(_FILES)

DESIGN_STEPS = ("4.1", "4.2", "4.3", "4.4", "4.5")


def builtin_target(target_id: str) -> tuple[NarrativeGraph, LevelConstraints]:
    """Load a frozen benchmark target and its level budgets."""
    key = str(target_id)
    if key not in _FILES:
        raise NotFoundError(f"unknown target {target_id!r}; expected one of {TARGET_IDS}")
    text = (
        resources.files(__package__).joinpath(_FILES[key]).read_text(encoding="utf-8")
    )
    return loads(text), _BUDGETS[key.split(".")[0]]
