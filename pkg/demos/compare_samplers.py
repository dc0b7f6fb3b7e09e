"""Exhaustive search, annealing, greedy descent and the spiking sampler on one instance."""

import numpy as np

from sparsequbo.samplers import (
    AnnealSchedule,
    SpikingConfig,
    best_sample,
    brute_force,
    greedy_descent,
    simulated_annealing,
    spiking_sample,
    spiking_sweep,
)
from sparsequbo.suites import random_sparse_coding_qubo

d, x, lam, inst = random_sparse_coding_qubo(n=16, seed=3)

exact = brute_force(inst)
print(f"optimum      {exact.energy:+.5f}  {exact.state_string()}")

sa = best_sample(simulated_annealing(inst, AnnealSchedule(sweeps=1000), num_reads=100, seed=0))
print(f"annealing    {sa.energy:+.5f}  {sa.state_string()}")

greedy = greedy_descent(inst, np.zeros(inst.n, dtype=np.int8))
print(f"greedy       {greedy.energy:+.5f}  {greedy.state_string()}")

sweep = spiking_sweep(inst, [5000, 20000], [1000.0, 10000.0], seeds_per_cell=20, seed=0)
spk = best_sample(sweep)
print(f"spiking      {spk.energy:+.5f}  {spk.state_string()}  ({len(sweep)} readouts)")

# one run read out every 2000 steps: refractory periods knock the network
# out of its best state and it later comes back
trace = spiking_sample(inst, SpikingConfig(sim_steps=20000, weight_scaling=3000, seed=0))
print("readout trace:", " ".join(f"{r.energy:+.3f}" for r in trace))
