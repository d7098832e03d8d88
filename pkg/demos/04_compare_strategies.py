# %% [markdown]
# # Comparing strategies
#
# Reads the summaries of a finished ``sarestart run`` (by default the
# committed 4 x 10 experiment) and repeats the pairwise U-tests.

# %%
import sys
from pathlib import Path

import numpy as np

from sarestart.runner import compare_strategies, format_comparison, read_summaries

here = Path(__file__).resolve().parent
results = Path(sys.argv[1]) if len(sys.argv) > 1 else here.parent / "results" / "e2e"
summaries = read_summaries(results)

# %%
by = {}
for s in summaries:
    by.setdefault(s.strategy, []).append(s)
for name, runs in by.items():
    gens = np.array([r.convergence_generation for r in runs])
    print(f"{name:7s} converged at median {np.median(gens):5.1f}  (min {gens.min()}, max {gens.max()})")

# %%
rows = compare_strategies(summaries)
print(format_comparison([r for r in rows if r.significant], summaries))

# %% the per-generation logs are plot-ready
import csv

with open(results / "indiv" / "run_000.csv") as fh:
    log = list(csv.DictReader(fh))
print("columns:", ", ".join(log[0]))
# INDIV's mean F every 10 generations: restarts keep pulling it back up
print("mean F:", [round(float(r["mean_f_rate"]), 2) for r in log[::10]])
