"""Binary sparse coding as a QUBO.

Builds the QUBO for a tiny dictionary and checks, state by state, that the
QUBO energy plus the stored offset equals the original objective.
"""

import itertools

import numpy as np

from sparsequbo.qubo import build_qubo, objective_energy, qubo_energy

rng = np.random.default_rng(7)
d = rng.standard_normal((4, 6))
x = rng.uniform(0, 1, 4)
lam = 0.3

inst = build_qubo(d, x, lam)
print("linear terms h:", np.round(inst.h, 4))
print("couplings:", {k: round(v, 4) for k, v in inst.couplings().items()})
print("offset:", round(inst.offset, 4))

worst = max(
    abs(objective_energy(d, x, lam, a) - inst.offset - qubo_energy(inst, a))
    for a in itertools.product((0, 1), repeat=6)
)
print(f"largest mismatch over all 64 states: {worst:.2e}")
