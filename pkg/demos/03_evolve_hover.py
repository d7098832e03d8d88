# %% [markdown]
# # Evolving hover gains
#
# One INDIV repeat on the noisy simulator: 20 controllers that at least
# leave the floor, evolved until every one of them completes the flight
# twice in a row. Takes a minute or so.

# %%
import numpy as np

from sarestart.de import generation_step
from sarestart.hover import GAIN_CAP, SimConfig, make_evaluator, run_flight, seed_population
from sarestart.pid import CHANNELS
from sarestart.restart import RestartPolicy

cfg = SimConfig()
rng = np.random.default_rng(2)
policy = RestartPolicy("indiv")
evaluator = make_evaluator(cfg)
pop = seed_population(cfg, rng, policy, size=20, entropy=2, evaluator=evaluator)
print("seeded; best", pop.fitness.max())

# %%
for _ in range(300):
    pop, st = generation_step(pop, evaluator, policy, rng, 0.0, GAIN_CAP)
    if st.generation % 10 == 0 or st.converged:
        print(f"gen {st.generation:3d}  high {st.high_f:9.0f}  mean {st.mean_f:9.0f}  "
              f"successes {st.n_success:2d}/20  CR {st.mean_cr:.2f}  F {st.mean_f_rate:.2f}")
    if st.converged:
        break

# %% the winning gains, per channel
best = pop.best
for i, name in enumerate(CHANNELS):
    kp, ki, kd = best.genome[3 * i:3 * i + 3]
    print(f"{name:6s} kp {kp:8.3f}  ki {ki:8.3f}  kd {kd:8.3f}")

# %% fly it again on fresh noise
for seed in range(3):
    rec = run_flight(best.genome, cfg, np.random.default_rng(100 + seed))
    print(rec.termination.name, round(rec.fitness))
