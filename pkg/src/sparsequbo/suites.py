"""Random sparse-coding instances and the oracle check suites.

The suites return plain dictionaries so they can be reported from the CLI
and asserted on in tests.
"""

from __future__ import annotations

import itertools
import time

import numpy as np

from .qubo import QuboInstance, build_qubo, objective_energy, qubo_energy
from .samplers import (
    AnnealSchedule,
    best_sample,
    brute_force,
    greedy_descent,
    simulated_annealing,
)

__all__ = [
    "random_dictionary",
    "random_sparse_coding_qubo",
    "sparse_coding_suite",
    "exactness_suite",
    "sa_oracle_suite",
    "greedy_bound_suite",
]


def random_dictionary(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian atoms with norms uniform in [0.5, 1.5]."""
    d = rng.standard_normal((m, n))
    return d * (rng.uniform(0.5, 1.5, n) / np.linalg.norm(d, axis=0))


def random_sparse_coding_qubo(n: int = 16, m: int = 8, k_active: int = 3, lam: float = 0.1, seed: int = 0):
    """(D, x, lam, QUBO) for a signal built from ``k_active`` nonnegative atoms.

    Atom norms are uniform in [0.3, 0.8]; the signal gets N(0, 0.05) noise
    and is clipped to [0, 1].
    """
    rng = np.random.default_rng(seed)
    d = np.abs(rng.standard_normal((m, n)))
    d *= rng.uniform(0.3, 0.8, n) / np.linalg.norm(d, axis=0)
    a = np.zeros(n)
    a[rng.choice(n, size=min(k_active, n), replace=False)] = 1.0
    x = np.clip(d @ a + rng.normal(0.0, 0.05, m), 0.0, 1.0)
    return d, x, lam, build_qubo(d, x, lam)


def sparse_coding_suite(count: int = 20, n: int = 16, seed: int = 0) -> list[QuboInstance]:
    return [random_sparse_coding_qubo(n=n, seed=seed + k)[3] for k in range(count)]


def exactness_suite(count: int = 50, m: int = 4, max_n: int = 12, seed: int = 0, tol: float = 1e-9) -> dict:
    """Objective vs offset + QUBO energy over every binary state of random instances."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        d = random_dictionary(m, n, rng)
        x = rng.uniform(0.0, 1.0, m)
        lam = float(rng.uniform(0.0, 1.5))
        inst = build_qubo(d, x, lam)
        for bits in itertools.product((0, 1), repeat=n):
            diff = objective_energy(d, x, lam, bits) - (inst.offset + qubo_energy(inst, bits))
            worst = max(worst, abs(diff))
    return {"name": "exactness", "passed": worst <= tol, "max_abs_diff": worst,
            "instances": count, "seconds": time.perf_counter() - t0}


def sa_oracle_suite(count: int = 20, n: int = 16, reads: int = 100, sweeps: int = 1000,
                    seed: int = 0, required: int = 19) -> dict:
    """Best-of-``reads`` annealing against the exhaustive optimum."""
    t0 = time.perf_counter()
    hits = 0
    gaps = []
    for k, inst in enumerate(sparse_coding_suite(count, n, seed)):
        opt = brute_force(inst).energy
        best = best_sample(simulated_annealing(inst, AnnealSchedule(sweeps=sweeps), reads, seed + k)).energy
        gaps.append(best - opt)
        hits += best <= opt + 1e-9
    return {"name": "sa_oracle", "passed": hits >= required, "hits": hits, "instances": count,
            "max_gap": max(gaps), "seconds": time.perf_counter() - t0}


def greedy_bound_suite(count: int = 20, n: int = 16, seed: int = 0) -> dict:
    """Greedy descent never beats the exhaustive optimum."""
    t0 = time.perf_counter()
    violations = 0
    for inst in sparse_coding_suite(count, n, seed):
        opt = brute_force(inst).energy
        g = greedy_descent(inst, np.zeros(inst.n, dtype=np.int8)).energy
        violations += g < opt - 1e-9
    return {"name": "greedy_bound", "passed": violations == 0, "violations": violations,
            "instances": count, "seconds": time.perf_counter() - t0}
