"""Self-adaptive differential evolution with rate restarts, and a simulated
hexacopter hover benchmark for comparing restart strategies."""

from .de import (
    GenerationStats,
    Individual,
    Population,
    Rates,
    STATIC_RATES,
    binomial_crossover,
    donor_vector,
    generation_step,
    init_population,
    init_rates,
    mutate_rates,
    select,
)
from .restart import RestartEvent, RestartPolicy, Strategy, update_global, update_individual
from .stats import RunSummary, UTestResult, detect_convergence, mann_whitney_u, summarize

__all__ = [
    "GenerationStats",
    "Individual",
    "Population",
    "Rates",
    "STATIC_RATES",
    "binomial_crossover",
    "donor_vector",
    "generation_step",
    "init_population",
    "init_rates",
    "mutate_rates",
    "select",
    "RestartEvent",
    "RestartPolicy",
    "Strategy",
    "update_global",
    "update_individual",
    "RunSummary",
    "UTestResult",
    "detect_convergence",
    "mann_whitney_u",
    "summarize",
]

__version__ = "0.1.0"
