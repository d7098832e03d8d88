"""Experiment orchestration: repeats per strategy, per-generation logs,
summary tables and pairwise strategy comparison."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .de import GenerationStats, generation_step, population_stats
from .hexsim import SensorParams, VehicleParams, WindModel
from .hover import (
    GAIN_CAP,
    HealthParams,
    SeedingError,
    SimConfig,
    StateLimits,
    make_evaluator,
    seed_population,
)
from .pid import ControllerLimits
from .restart import ALL, RestartPolicy, Strategy
from .stats import SUMMARY_COLUMNS, RunSummary, mann_whitney_u, summarize

__all__ = [
    "ConfigError",
    "InsufficientData",
    "ExperimentConfig",
    "RepeatResult",
    "GENERATION_COLUMNS",
    "EVENT_COLUMNS",
    "COMPARE_METRICS",
    "derive_seed",
    "load_config",
    "dump_config",
    "run_repeat",
    "run_experiment",
    "read_summaries",
    "compare_strategies",
    "ComparisonRow",
    "format_comparison",
]

log = logging.getLogger(__name__)

GENERATION_COLUMNS = ("generation", "high_f", "mean_f", "low_f", "mean_cr", "mean_f_rate", "restarts", "evals")
EVENT_COLUMNS = ("generation", "scope", "slot", "old_cr", "old_f", "new_cr", "new_f")
COMPARE_METRICS = ("convergence_generation", "high_f", "mean_f", "low_f", "mean_cr", "mean_f_rate")
STRATEGY_ORDER = tuple(Strategy)


class ConfigError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    strategies: tuple = (Strategy.INDIV,)
    repeats: int = 10
    population_size: int = 20
    restart_threshold: int = 5
    master_seed: int = 0
    max_generations: int = 500
    out: str = "results"
    allow_nonconverged: bool = False
    workers: int = 1  # concurrent repeats (processes)
    eval_threads: int = 1  # concurrent child evaluations per generation
    sim: SimConfig = SimConfig()

    def __post_init__(self):
        strategies = self.strategies
        if isinstance(strategies, (str, Strategy)):
            strategies = (strategies,)
        try:
            parsed = tuple(Strategy.parse(s) for s in strategies)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "strategies", parsed)
        if not parsed:
            raise ConfigError("at least one strategy is required")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.population_size < 4:
            raise ConfigError("population_size must be >= 4")
        if self.max_generations < 1:
            raise ConfigError("max_generations must be >= 1")
        if self.restart_threshold < 1:
            raise ConfigError("restart_threshold must be >= 1")
        if self.workers < 1 or self.eval_threads < 1:
            raise ConfigError("workers and eval_threads must be >= 1")


def derive_seed(master_seed: int, strategy: Strategy, repeat: int) -> int:
    """Seed for one repeat: 63 bits drawn from ``SeedSequence(master_seed,
    spawn_key=(strategy index, repeat))``, strategies indexed
    STATIC, ADAPT, INDIV, GLOBAL."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(STRATEGY_ORDER.index(strategy), repeat))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


# config file ---------------------------------------------------------------

_SIM_SECTIONS = {
    "vehicle": VehicleParams,
    "wind": WindModel,
    "sensor": SensorParams,
    "controller": ControllerLimits,
    "state_limits": StateLimits,
    "health": HealthParams,
}
_SIM_SCALARS = ("noise", "duration", "probe_duration", "probe_airborne", "reevaluate")


def _coerce(text: str, like):
    text = text.strip()
    if isinstance(like, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def load_config(path) -> ExperimentConfig:
    """Read an INI-style key/value experiment file.

    ``[experiment]`` holds the run settings (plus ``noise``/``duration``
    style simulator scalars); ``[vehicle]``, ``[wind]``, ``[sensor]``,
    ``[controller]``, ``[state_limits]`` and ``[health]`` override simulator
    constants by field name.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    base = ExperimentConfig()
    exp_kwargs = {}
    sim_kwargs = {}
    try:
        for section in parser.sections():
            items = dict(parser.items(section))
            if section == "experiment":
                for key, text in items.items():
                    if key == "strategies":
                        exp_kwargs[key] = tuple(s.strip() for s in text.split(",") if s.strip())
                    elif key in _SIM_SCALARS:
                        sim_kwargs[key] = _coerce(text, getattr(base.sim, key))
                    elif key in {f.name for f in fields(ExperimentConfig)} - {"sim"}:
                        exp_kwargs[key] = _coerce(text, getattr(base, key))
                    else:
                        raise ConfigError(f"unknown key [experiment] {key}")
            elif section in _SIM_SECTIONS:
                cls = _SIM_SECTIONS[section]
                defaults = cls()
                vals = {}
                for key, text in items.items():
                    if key not in cls._fields:
                        raise ConfigError(f"unknown key [{section}] {key}")
                    vals[key] = _coerce(text, getattr(defaults, key))
                sim_kwargs[section] = defaults._replace(**vals)
            else:
                raise ConfigError(f"unknown section [{section}]")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None
    return replace(base, sim=replace(base.sim, **sim_kwargs), **exp_kwargs)


def dump_config(cfg: ExperimentConfig) -> str:
    """The effective configuration in :func:`load_config` format."""
    parser = configparser.ConfigParser()
    exp = {
        "strategies": ", ".join(s.value for s in cfg.strategies),
        "repeats": cfg.repeats,
        "population_size": cfg.population_size,
        "restart_threshold": cfg.restart_threshold,
        "master_seed": cfg.master_seed,
        "max_generations": cfg.max_generations,
        "allow_nonconverged": cfg.allow_nonconverged,
    }
    for key in _SIM_SCALARS:
        exp[key] = getattr(cfg.sim, key)
    parser["experiment"] = {k: str(v) for k, v in exp.items()}
    for section in _SIM_SECTIONS:
        parser[section] = {k: repr(v) if isinstance(v, float) else str(v)
                           for k, v in getattr(cfg.sim, section)._asdict().items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# running -------------------------------------------------------------------

@dataclass(frozen=True)
class RepeatResult:
    summary: RunSummary
    history: tuple
    repeat: int


def _generation_row(st: GenerationStats) -> list:
    return [st.generation, repr(st.high_f), repr(st.mean_f), repr(st.low_f),
            repr(st.mean_cr), repr(st.mean_f_rate), len(st.restart_events), st.evals]


def _event_rows(st: GenerationStats) -> list:
    rows = []
    for ev in st.restart_events:
        scope = "ALL" if ev.scope == ALL else "slot"
        for slot, old, new in zip(ev.slots, ev.old_rates, ev.new_rates):
            rows.append([ev.generation, scope, slot, repr(old.cr), repr(old.f), repr(new.cr), repr(new.f)])
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_repeat(cfg: ExperimentConfig, strategy: Strategy, repeat: int,
               out_dir: Optional[Path] = None) -> RepeatResult:
    """Seed, evolve until convergence or ``max_generations``, log to ``out_dir``."""
    strategy = Strategy.parse(strategy)
    seed = derive_seed(cfg.master_seed, strategy, repeat)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    policy = RestartPolicy(strategy, cfg.restart_threshold)
    evaluator = make_evaluator(cfg.sim)
    executor = ThreadPoolExecutor(cfg.eval_threads) if cfg.eval_threads > 1 else None
    try:
        pop = seed_population(cfg.sim, rng, policy, size=cfg.population_size,
                              entropy=seed, evaluator=evaluator, executor=executor)
        first = replace(population_stats(pop), evals=cfg.population_size)
        history = [first]
        for _ in range(0 if first.converged else cfg.max_generations):
            pop, st = generation_step(pop, evaluator, policy, rng, 0.0, GAIN_CAP, executor=executor)
            history.append(st)
            if st.converged:
                break
    finally:
        if executor is not None:
            executor.shutdown()

    summary = summarize(history, strategy=strategy.value, seed=seed)
    if out_dir is not None:
        run_dir = Path(out_dir) / strategy.value
        run_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(run_dir / f"run_{repeat:03d}.csv", GENERATION_COLUMNS,
                   [_generation_row(st) for st in history])
        _write_csv(run_dir / f"events_{repeat:03d}.csv", EVENT_COLUMNS,
                   [row for st in history for row in _event_rows(st)])
    return RepeatResult(summary=summary, history=tuple(history), repeat=repeat)


def _summary_row(res: RepeatResult) -> list:
    s = res.summary
    vals = asdict(s)
    row = []
    for col in SUMMARY_COLUMNS:
        v = vals[col]
        row.append(repr(v) if isinstance(v, float) else v)
    return row[:2] + [res.repeat] + row[2:]


SUMMARY_HEADER = SUMMARY_COLUMNS[:2] + ("repeat",) + SUMMARY_COLUMNS[2:]


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> list:
    """Run every (strategy, repeat) pair; returns the :class:`RunSummary` rows.

    With ``write`` the per-generation logs, restart-event logs, one
    ``summary_<strategy>.csv`` per strategy and the effective
    ``config.ini`` go to ``cfg.out``.
    """
    out = Path(cfg.out) if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(dump_config(cfg))
    jobs = [(s, r) for s in cfg.strategies for r in range(cfg.repeats)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run_repeat, [cfg] * len(jobs), [s for s, _ in jobs],
                                    [r for _, r in jobs], [out] * len(jobs)))
    else:
        results = []
        for s, r in jobs:
            res = run_repeat(cfg, s, r, out)
            log.info("%s repeat %d: generation %d, converged=%s", s.value, r,
                     res.summary.convergence_generation, res.summary.converged)
            results.append(res)
    if out is not None:
        for strategy in cfg.strategies:
            rows = [_summary_row(res) for res in results if res.summary.strategy == strategy.value]
            _write_csv(out / f"summary_{strategy.value}.csv", SUMMARY_HEADER, rows)
    return [res.summary for res in results]


# comparison ----------------------------------------------------------------

def read_summaries(directory) -> list:
    """Load every ``summary_*.csv`` under ``directory``."""
    paths = sorted(Path(directory).glob("summary_*.csv"))
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append(RunSummary(
                    strategy=rec["strategy"],
                    seed=int(rec["seed"]),
                    convergence_generation=int(rec["convergence_generation"]),
                    high_f=float(rec["high_f"]),
                    mean_f=float(rec["mean_f"]),
                    low_f=float(rec["low_f"]),
                    mean_cr=float(rec["mean_cr"]),
                    mean_f_rate=float(rec["mean_f_rate"]),
                    restart_count=int(rec["restart_count"]),
                    converged=rec["converged"] == "True",
                ))
    return rows


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    strategy_a: str
    strategy_b: str
    median_a: float
    median_b: float
    u_statistic: float
    p_value: float
    significant: bool


def compare_strategies(summaries: Iterable[RunSummary], alpha: float = 0.05,
                       metrics: Sequence[str] = COMPARE_METRICS) -> list:
    """Pairwise two-sided U-tests of every metric between every strategy pair."""
    groups = {}
    for s in summaries:
        groups.setdefault(s.strategy, []).append(s)
    if len(groups) < 2:
        raise InsufficientData("need at least two strategies to compare")
    thin = [k for k, v in groups.items() if len(v) < 2]
    if thin:
        raise InsufficientData(f"need at least two repeats per strategy: {', '.join(thin)}")
    order = [s.value for s in STRATEGY_ORDER if s.value in groups]
    order += sorted(k for k in groups if k not in order)
    rows = []
    for metric in metrics:
        for i, a in enumerate(order):
            for b in order[i + 1:]:
                xa = [getattr(s, metric) for s in groups[a]]
                xb = [getattr(s, metric) for s in groups[b]]
                res = mann_whitney_u(xa, xb, alpha=alpha)
                rows.append(ComparisonRow(metric, a, b, float(np.median(xa)), float(np.median(xb)),
                                          res.u_statistic, res.p_value, res.significant))
    return rows


def format_comparison(rows: Sequence[ComparisonRow], summaries: Sequence[RunSummary] = ()) -> str:
    """Markdown report: per-strategy means (std) and the flagged U-test pairs."""
    lines = []
    if summaries:
        lines += ["| strategy | n | conv. | high f | mean f | low f | CR | F | restarts |",
                  "|---|---|---|---|---|---|---|---|---|"]
        groups = {}
        for s in summaries:
            groups.setdefault(s.strategy, []).append(s)
        for name, runs in groups.items():
            def ms(attr, fmt):
                v = np.array([getattr(r, attr) for r in runs], dtype=float)
                return f"{v.mean():{fmt}} ({v.std(ddof=1) if len(v) > 1 else 0.0:{fmt}})"
            lines.append(f"| {name.upper()} | {len(runs)} | {ms('convergence_generation', '.1f')} | "
                         f"{ms('high_f', '.1f')} | {ms('mean_f', '.1f')} | {ms('low_f', '.1f')} | "
                         f"{ms('mean_cr', '.3f')} | {ms('mean_f_rate', '.3f')} | "
                         f"{ms('restart_count', '.1f')} |")
        lines.append("")
    lines += ["| metric | A | B | median A | median B | U | p | p<alpha |",
              "|---|---|---|---|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r.metric} | {r.strategy_a} | {r.strategy_b} | {r.median_a:.4g} | "
                     f"{r.median_b:.4g} | {r.u_statistic:g} | {r.p_value:.4g} | "
                     f"{'yes' if r.significant else ''} |")
    return "\n".join(lines) + "\n"


def write_comparison(rows: Sequence[ComparisonRow], directory, summaries=()) -> None:
    directory = Path(directory)
    _write_csv(directory / "comparison.csv",
               ("metric", "strategy_a", "strategy_b", "median_a", "median_b", "u", "p", "significant"),
               [[r.metric, r.strategy_a, r.strategy_b, repr(r.median_a), repr(r.median_b),
                 repr(r.u_statistic), repr(r.p_value), r.significant] for r in rows])
    (directory / "comparison.md").write_text(format_comparison(rows, summaries))
