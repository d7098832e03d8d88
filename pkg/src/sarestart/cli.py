"""Command line: ``sarestart run`` and ``sarestart compare``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .hover import SeedingError
from .restart import Strategy
from .runner import (
    ConfigError,
    ExperimentConfig,
    InsufficientData,
    compare_strategies,
    format_comparison,
    load_config,
    read_summaries,
    run_experiment,
    write_comparison,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SEEDING = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4

log = logging.getLogger("sarestart")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sarestart", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run repeats of one or more strategies")
    run.add_argument("--config", help="INI experiment file; flags override it")
    run.add_argument("--strategy", action="append",
                     choices=[s.value for s in Strategy] + ["all"],
                     help="repeatable; 'all' runs the four strategies")
    run.add_argument("--repeats", type=int)
    run.add_argument("--seed", type=int, dest="master_seed")
    run.add_argument("--pop-size", type=int, dest="population_size")
    run.add_argument("--restart-threshold", type=int)
    run.add_argument("--max-generations", type=int)
    run.add_argument("--no-noise", action="store_true")
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("--eval-threads", type=int)
    run.add_argument("--allow-nonconverged", action="store_true", default=None)

    cmp_ = sub.add_parser("compare", help="pairwise U-tests over summary CSVs")
    cmp_.add_argument("--in", dest="in_dir", required=True)
    cmp_.add_argument("--alpha", type=float, default=0.05)
    return p


def _run(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        overrides = {}
        for key in ("repeats", "master_seed", "population_size", "restart_threshold",
                    "max_generations", "out", "workers", "eval_threads", "allow_nonconverged"):
            val = getattr(args, key)
            if val is not None:
                overrides[key] = val
        if args.strategy:
            names = [s.value for s in Strategy] if "all" in args.strategy else args.strategy
            overrides["strategies"] = tuple(dict.fromkeys(names))
        if args.no_noise:
            overrides["sim"] = replace(cfg.sim, noise=False)
        cfg = replace(cfg, **overrides)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_CONFIG

    if args.restart_threshold is not None:
        unused = [s.value.upper() for s in cfg.strategies if not s.restarts]
        if unused:
            log.warning("restart threshold is unused for %s", ", ".join(unused))

    try:
        summaries = run_experiment(cfg)
    except SeedingError as exc:
        log.error("seeding failed: %s", exc)
        return EXIT_SEEDING
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO

    for s in summaries:
        print(f"{s.strategy}\tseed={s.seed}\tgeneration={s.convergence_generation}\t"
              f"converged={s.converged}\thigh_f={s.high_f:.1f}")
    if not all(s.converged for s in summaries) and not cfg.allow_nonconverged:
        log.error("some repeats hit max_generations without converging")
        return EXIT_NONCONVERGED
    return EXIT_OK


def _compare(args) -> int:
    try:
        summaries = read_summaries(args.in_dir)
        rows = compare_strategies(summaries, alpha=args.alpha)
        write_comparison(rows, args.in_dir, summaries)
    except InsufficientData as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (OSError, KeyError, ValueError) as exc:
        log.error("cannot read summaries: %s", exc)
        return EXIT_IO
    print(format_comparison(rows, summaries), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "run":
        return _run(args)
    return _compare(args)


if __name__ == "__main__":
    sys.exit(main())
