"""Fitness-stagnation restarts of the self-adaptive rates."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .de import Individual, Population, init_rates

__all__ = [
    "Strategy",
    "RestartPolicy",
    "RestartEvent",
    "ALL",
    "update_individual",
    "update_global",
]

ALL = "ALL"


class Strategy(enum.Enum):
    STATIC = "static"
    ADAPT = "adapt"
    INDIV = "indiv"
    GLOBAL = "global"

    @property
    def adapts_rates(self) -> bool:
        return self is not Strategy.STATIC

    @property
    def restarts(self) -> bool:
        return self in (Strategy.INDIV, Strategy.GLOBAL)

    @classmethod
    def parse(cls, name) -> "Strategy":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown strategy {name!r}") from None


@dataclass(frozen=True)
class RestartEvent:
    generation: int
    scope: object  # slot index, or ALL
    slots: tuple
    old_rates: tuple
    new_rates: tuple


def update_individual(
    slot: Individual,
    child_replaced_parent: bool,
    threshold: int,
    rng,
    slot_index: int = 0,
    generation: int = 0,
) -> tuple:
    """Advance one slot's stagnation counter; restart its rates at ``threshold``."""
    if child_replaced_parent:
        return replace(slot, restart_counter=0), None
    counter = slot.restart_counter + 1
    if counter < threshold:
        return replace(slot, restart_counter=counter), None
    new_rates = init_rates(rng)
    event = RestartEvent(
        generation=generation,
        scope=slot_index,
        slots=(slot_index,),
        old_rates=(slot.rates,),
        new_rates=(new_rates,),
    )
    return replace(slot, rates=new_rates, restart_counter=0), event


def update_global(
    pop: Population, best_improved: bool, threshold: int, rng
) -> tuple:
    """Advance the population counter; restart every member's rates at ``threshold``."""
    if best_improved:
        return replace(pop, global_counter=0), None
    counter = pop.global_counter + 1
    if counter < threshold:
        return replace(pop, global_counter=counter), None
    old = tuple(m.rates for m in pop.members)
    members = tuple(
        replace(m, rates=init_rates(rng), restart_counter=0) for m in pop.members
    )
    event = RestartEvent(
        generation=pop.generation,
        scope=ALL,
        slots=tuple(range(len(members))),
        old_rates=old,
        new_rates=tuple(m.rates for m in members),
    )
    return replace(pop, members=members, global_counter=0), event


@dataclass(frozen=True)
class RestartPolicy:
    kind: Strategy = Strategy.INDIV
    threshold: int = 5

    def __post_init__(self):
        object.__setattr__(self, "kind", Strategy.parse(self.kind))
        if int(self.threshold) < 1:
            raise ValueError("restart threshold must be >= 1")

    def apply(self, pop: Population, replaced, best_improved: bool, rng) -> tuple:
        """Run the policy once at a generation boundary.

        Returns ``(population, events)``; STATIC and ADAPT never restart.
        """
        if self.kind is Strategy.INDIV:
            members = []
            events = []
            for i, (m, rep) in enumerate(zip(pop.members, replaced)):
                m, ev = update_individual(
                    m, rep, self.threshold, rng, slot_index=i, generation=pop.generation
                )
                members.append(m)
                if ev is not None:
                    events.append(ev)
            return replace(pop, members=tuple(members)), events
        if self.kind is Strategy.GLOBAL:
            pop, ev = update_global(pop, best_improved, self.threshold, rng)
            return pop, [] if ev is None else [ev]
        return pop, []
