"""DE/rand/1/bin with lognormal self-adaptation of the crossover rate and
differential weight.

Fitness is maximised. Genomes are 1-D float arrays; each gene is clamped to
a ``[lower, upper]`` box after the donor is formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "CR_BOUNDS",
    "F_BOUNDS",
    "STATIC_RATES",
    "EvaluationError",
    "Rates",
    "Individual",
    "Population",
    "GenerationStats",
    "init_rates",
    "mutate_rates",
    "clamp_rates",
    "donor_vector",
    "binomial_crossover",
    "pick_donors",
    "select",
    "eval_seed",
    "init_population",
    "generation_step",
]

CR_BOUNDS = (0.0, 1.0)
F_BOUNDS = (0.0, 2.0)
# Lognormal steps can walk a rate arbitrarily close to the open lower bound.
RATE_FLOOR = 1e-9


class EvaluationError(RuntimeError):
    """Raised by an evaluator when a candidate cannot be evaluated at all."""


@dataclass(frozen=True)
class Rates:
    cr: float
    f: float

    def within_bounds(self) -> bool:
        return 0.0 < self.cr <= 1.0 and 0.0 < self.f <= 2.0


STATIC_RATES = Rates(cr=0.5, f=0.8)


@dataclass(frozen=True)
class Individual:
    genome: np.ndarray
    rates: Rates
    fitness: float = 0.0
    restart_counter: int = 0
    success: bool = False


@dataclass(frozen=True)
class Population:
    members: tuple
    global_counter: int = 0
    best_fitness_seen: float = -math.inf
    generation: int = 0
    # Root entropy for per-evaluation random sub-streams.
    entropy: int = 0

    def __len__(self):
        return len(self.members)

    @property
    def fitness(self) -> np.ndarray:
        return np.array([m.fitness for m in self.members], dtype=float)

    @property
    def best(self) -> Individual:
        return self.members[int(np.argmax(self.fitness))]


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    high_f: float
    mean_f: float
    low_f: float
    mean_cr: float
    mean_f_rate: float
    restart_events: tuple = ()
    evals: int = 0
    replacements: int = 0
    n_success: int = 0
    converged: bool = False
    best_improved: bool = False


def init_rates(rng) -> Rates:
    """Uniform rates on (0, 1] x (0, 2]."""
    # 1 - U[0,1) lies in (0, 1]
    cr = 1.0 - rng.random()
    f = 2.0 * (1.0 - rng.random())
    return Rates(cr=cr, f=f)


def clamp_rates(cr: float, f: float) -> Rates:
    return Rates(
        cr=min(max(cr, RATE_FLOOR), CR_BOUNDS[1]),
        f=min(max(f, RATE_FLOOR), F_BOUNDS[1]),
    )


def mutate_rates(parent: Rates, rng, clamp: bool = True) -> Rates:
    """Multiply each rate by ``exp(z)``, one fresh standard normal per rate.

    ``clamp=False`` skips the bound clamp; only useful for inspecting the
    raw lognormal step.
    """
    z_cr = rng.standard_normal()
    z_f = rng.standard_normal()
    cr = parent.cr * math.exp(z_cr)
    f = parent.f * math.exp(z_f)
    if not clamp:
        return Rates(cr=cr, f=f)
    return clamp_rates(cr, f)


def donor_vector(r1, r2, r3, f: float, lower=0.0, upper=np.inf) -> np.ndarray:
    """``r3 + f * (r1 - r2)`` clipped element-wise to ``[lower, upper]``."""
    r1, r2, r3 = (np.asarray(x, dtype=float) for x in (r1, r2, r3))
    return np.clip(r3 + f * (r1 - r2), lower, upper)


def binomial_crossover(parent, donor, cr: float, rng) -> np.ndarray:
    """Per-gene binomial crossover; gene ``R`` always comes from the donor.

    ``R`` is drawn first, then one uniform on [0, 1) per gene.
    """
    parent = np.asarray(parent, dtype=float)
    donor = np.asarray(donor, dtype=float)
    n = parent.shape[0]
    forced = int(rng.integers(n))
    take = np.asarray(rng.random(n)) < cr
    take[forced] = True
    return np.where(take, donor, parent)


def pick_donors(i: int, n: int, rng) -> tuple:
    """Three distinct member indices, all different from ``i``."""
    others = np.delete(np.arange(n), i)
    picked = rng.choice(others, size=3, replace=False)
    return int(picked[0]), int(picked[1]), int(picked[2])


def select(parent: Individual, child: Individual) -> Individual:
    """Greedy replacement; ties keep the parent."""
    if child.fitness > parent.fitness:
        return replace(child, restart_counter=0)
    return parent


def eval_seed(entropy: int, generation: int, slot: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy, spawn_key=(generation, slot))


def _outcome(result) -> tuple:
    """Normalise an evaluator return into (fitness, success, n_evaluations)."""
    if hasattr(result, "fitness"):
        fit = float(result.fitness)
        success = bool(getattr(result, "success", False))
        n = int(getattr(result, "evaluations", 1))
    else:
        fit, success, n = float(result), False, 1
    if not math.isfinite(fit):
        fit, success = 0.0, False
    return fit, success, n


def _evaluate_all(evaluator, genomes, seeds, executor) -> list:
    def run(genome, seed):
        try:
            return _outcome(evaluator(genome, seed))
        except EvaluationError:
            return 0.0, False, 1

    if executor is None:
        return [run(g, s) for g, s in zip(genomes, seeds)]
    return list(executor.map(run, genomes, seeds))


def init_population(
    genomes: Sequence[np.ndarray],
    evaluator: Callable,
    policy,
    rng,
    entropy: int = 0,
    executor=None,
) -> Population:
    """Build and evaluate generation 0 from ``genomes``."""
    genomes = [np.asarray(g, dtype=float) for g in genomes]
    if policy.kind.adapts_rates:
        rates = [init_rates(rng) for _ in genomes]
    else:
        rates = [STATIC_RATES] * len(genomes)
    seeds = [eval_seed(entropy, 0, i) for i in range(len(genomes))]
    outcomes = _evaluate_all(evaluator, genomes, seeds, executor)
    members = tuple(
        Individual(genome=g, rates=r, fitness=fit, success=ok)
        for g, r, (fit, ok, _) in zip(genomes, rates, outcomes)
    )
    best = max(m.fitness for m in members) if members else -math.inf
    return Population(members=members, best_fitness_seen=best, entropy=entropy)


def _stats(pop: Population, generation, events=(), evals=0, replacements=0, improved=False):
    fit = pop.fitness
    n_success = sum(1 for m in pop.members if m.success)
    return GenerationStats(
        generation=generation,
        high_f=float(fit.max()),
        mean_f=float(fit.mean()),
        low_f=float(fit.min()),
        mean_cr=float(np.mean([m.rates.cr for m in pop.members])),
        mean_f_rate=float(np.mean([m.rates.f for m in pop.members])),
        restart_events=tuple(events),
        evals=evals,
        replacements=replacements,
        n_success=n_success,
        converged=n_success == len(pop.members),
        best_improved=improved,
    )


def population_stats(pop: Population) -> GenerationStats:
    """Stats record for a population without advancing it (generation 0)."""
    return _stats(pop, pop.generation)


def generation_step(
    pop: Population,
    evaluator: Callable,
    policy,
    rng,
    lower=0.0,
    upper=np.inf,
    executor: Optional[object] = None,
) -> tuple:
    """Advance ``pop`` by one synchronous generation.

    Every child is built from the current population, all children are
    evaluated (optionally through ``executor``), then each slot is resolved
    by greedy selection and the restart policy runs once.

    The evaluator is called as ``evaluator(genome, seed)`` where ``seed`` is
    a ``SeedSequence`` keyed by (generation, slot); it may return a float or
    an object with ``fitness``/``success``/``evaluations`` attributes.
    Evaluators signal an unevaluable candidate with :class:`EvaluationError`,
    which scores it 0.
    """
    n = len(pop.members)
    if n < 4:
        raise ValueError("DE/rand/1 needs at least 4 members")
    generation = pop.generation + 1
    adapts = policy.kind.adapts_rates

    child_rates = []
    child_genomes = []
    for i, parent in enumerate(pop.members):
        rates = mutate_rates(parent.rates, rng) if adapts else STATIC_RATES
        a, b, c = pick_donors(i, n, rng)
        donor = donor_vector(
            pop.members[a].genome, pop.members[b].genome, pop.members[c].genome,
            rates.f, lower, upper,
        )
        child_genomes.append(binomial_crossover(parent.genome, donor, rates.cr, rng))
        child_rates.append(rates)

    seeds = [eval_seed(pop.entropy, generation, i) for i in range(n)]
    outcomes = _evaluate_all(evaluator, child_genomes, seeds, executor)

    members = []
    replaced = []
    evals = 0
    for parent, genome, rates, (fit, ok, n_eval) in zip(
        pop.members, child_genomes, child_rates, outcomes
    ):
        evals += n_eval
        child = Individual(genome=genome, rates=rates, fitness=fit, success=ok)
        survivor = select(parent, child)
        members.append(survivor)
        replaced.append(survivor is not parent)

    high = max(m.fitness for m in members)
    improved = high > pop.best_fitness_seen
    new_pop = replace(
        pop,
        members=tuple(members),
        generation=generation,
        best_fitness_seen=max(high, pop.best_fitness_seen),
    )
    new_pop, events = policy.apply(new_pop, replaced, improved, rng)
    stats = _stats(new_pop, generation, events, evals, sum(replaced), improved)
    return new_pop, stats
