"""QUBO samplers: exhaustive oracle, greedy descent, simulated annealing and a
discrete-time stochastic spiking network with refractory dynamics.

All samplers are pure functions of (instance, configuration, seed). Random
streams are per read: read ``k`` of a call seeded with ``seed`` draws from
``numpy.random.default_rng(seed ^ k)``, so results do not depend on the order
in which reads are executed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .qubo import QuboInstance, as_binary_state, qubo_energy

__all__ = [
    "CapacityError",
    "SampleResult",
    "AnnealSchedule",
    "SpikingConfig",
    "SpikingRun",
    "brute_force",
    "greedy_descent",
    "default_beta_range",
    "simulated_annealing",
    "spiking_run",
    "spiking_sample",
    "spiking_sweep",
    "best_sample",
    "write_samples_csv",
    "format_samples_csv",
    "SWEEP_SIM_STEPS",
    "SWEEP_WEIGHT_SCALINGS",
]

MAX_BRUTE_FORCE_VARS = 24

SWEEP_SIM_STEPS = (5000, 10000, 15000, 20000)
SWEEP_WEIGHT_SCALINGS = (10.0, 100.0, 1000.0, 10000.0, 100000.0)

# neuron phases
INTEGRATING, ACTIVE, REFRACTORY = 0, 1, 2

_I64_MAX = np.iinfo(np.int64).max
_I64_MIN = np.iinfo(np.int64).min


class CapacityError(ValueError):
    """Raised when an instance is too large for exhaustive enumeration."""


@dataclass(frozen=True, eq=False)
class SampleResult:
    state: np.ndarray
    energy: float
    solver: str
    read_index: int = 0
    readout_step: int = 0

    @property
    def sparsity(self) -> int:
        return int(self.state.sum())

    def state_string(self) -> str:
        return "".join("1" if b else "0" for b in self.state)


def _result(inst: QuboInstance, state, solver: str, read_index: int = 0, step: int = 0) -> SampleResult:
    state = as_binary_state(state, inst.n)
    state.setflags(write=False)
    return SampleResult(state, qubo_energy(inst, state), solver, read_index, step)


def best_sample(results: Iterable[SampleResult]) -> SampleResult:
    """Lowest-energy result; the earliest one wins ties."""
    best = None
    for r in results:
        if best is None or r.energy < best.energy:
            best = r
    if best is None:
        raise ValueError("no samples given")
    return best


# ---------------------------------------------------------------------------
# exhaustive oracle

def _all_states(k: int) -> np.ndarray:
    codes = np.arange(2**k, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k)) & 1).astype(np.float64)


def brute_force(inst: QuboInstance) -> SampleResult:
    """Global minimum by enumeration of all 2**n states.

    Ties go to the state with the smallest integer encoding, reading variable
    ``i`` as bit ``i``. The enumeration splits the variables into a low and a
    high block so each block of energies is one matrix product.
    """
    n = inst.n
    if n > MAX_BRUTE_FORCE_VARS:
        raise CapacityError(f"brute force supports at most {MAX_BRUTE_FORCE_VARS} variables, got {n}")
    n_lo = (n + 1) // 2
    n_hi = n - n_lo
    h, q = inst.h, inst.q
    lo = _all_states(n_lo)
    e_lo = lo @ h[:n_lo] + np.einsum("ki,ij,kj->k", lo, q[:n_lo, :n_lo], lo)
    hi = _all_states(n_hi)
    e_hi = hi @ h[n_lo:] + np.einsum("ki,ij,kj->k", hi, q[n_lo:, n_lo:], hi)
    cross = q[:n_lo, n_lo:]

    best_e = np.inf
    best_code = 0
    batch = 256
    for start in range(0, hi.shape[0], batch):
        hb = hi[start:start + batch]
        # energies[l, k] for low state l and high state start + k
        energies = e_lo[:, None] + lo @ (cross @ hb.T) + e_hi[None, start:start + batch]
        # column-major argmin visits codes in increasing order within the batch
        flat = np.argmin(energies.T)
        k, l = divmod(int(flat), energies.shape[0])
        if energies[l, k] < best_e:
            best_e = energies[l, k]
            best_code = l + ((start + k) << n_lo)
    state = (best_code >> np.arange(n)) & 1
    return _result(inst, state, "brute")


# ---------------------------------------------------------------------------
# greedy descent

def greedy_descent(inst: QuboInstance, start) -> SampleResult:
    """Steepest single-flip descent; ties go to the lowest index."""
    a = as_binary_state(start, inst.n).astype(np.float64)
    sym = inst.symmetric()
    field_ = inst.h + sym @ a
    while True:
        delta = (1.0 - 2.0 * a) * field_
        i = int(np.argmin(delta))
        if not delta[i] < 0.0:
            break
        step = 1.0 - 2.0 * a[i]
        a[i] += step
        field_ += step * sym[:, i]
    return _result(inst, a, "greedy")


# ---------------------------------------------------------------------------
# simulated annealing

def default_beta_range(inst: QuboInstance) -> tuple[float, float]:
    """Inverse-temperature endpoints for a geometric annealing schedule.

    The hottest beta accepts the largest possible single-flip uphill move
    (bounded by |h_i| + sum_j |q_ij|) with probability 1/2; the coldest
    accepts the smallest nonzero coefficient magnitude with probability 1/100.
    """
    sym = np.abs(inst.symmetric())
    bound = np.abs(inst.h) + sym.sum(axis=1)
    de_max = float(bound.max())
    mags = np.concatenate([np.abs(inst.h), np.abs(inst.q[np.triu_indices(inst.n, 1)])])
    mags = mags[mags > 0]
    if de_max == 0.0 or mags.size == 0:
        raise ValueError("all-zero instance: annealing schedule is undefined")
    de_min = float(mags.min())
    return math.log(2.0) / de_max, math.log(100.0) / de_min


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric beta schedule; missing endpoints come from :func:`default_beta_range`."""

    sweeps: int = 1000
    beta_start: float | None = None
    beta_end: float | None = None

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be positive")
        for b in (self.beta_start, self.beta_end):
            if b is not None and not b > 0:
                raise ValueError("beta endpoints must be positive")
        if self.beta_start is not None and self.beta_end is not None and self.beta_end < self.beta_start:
            raise ValueError("beta_end must be >= beta_start")

    def betas(self, inst: QuboInstance) -> np.ndarray:
        b0, b1 = self.beta_start, self.beta_end
        if b0 is None or b1 is None:
            d0, d1 = default_beta_range(inst)
            b0 = d0 if b0 is None else b0
            b1 = d1 if b1 is None else b1
        b1 = max(b0, b1)
        return np.geomspace(b0, b1, self.sweeps)


@njit(cache=True, nogil=True)
def _anneal(h, sym, betas, state, uniforms):
    n = h.shape[0]
    fld = h.copy()
    for j in range(n):
        if state[j]:
            for i in range(n):
                fld[i] += sym[i, j]
    energy = 0.0
    for i in range(n):
        if state[i]:
            energy += 0.5 * (h[i] + fld[i])
    best = state.copy()
    best_energy = energy
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(n):
            de = -fld[i] if state[i] else fld[i]
            if de <= 0.0 or uniforms[s, i] < math.exp(-beta * de):
                sign = -1.0 if state[i] else 1.0
                state[i] = 1 - state[i]
                for k in range(n):
                    fld[k] += sign * sym[k, i]
                energy += de
                if energy < best_energy:
                    best_energy = energy
                    best[:] = state
    return best


def simulated_annealing(
    inst: QuboInstance,
    sched: AnnealSchedule | None = None,
    num_reads: int = 1000,
    seed: int = 0,
) -> list[SampleResult]:
    """Single-flip Metropolis annealing, one independent run per read.

    Each read starts from a uniformly random state, performs
    ``sched.sweeps`` sequential sweeps over all variables and reports the
    lowest-energy state it visited.
    """
    if num_reads < 1:
        raise ValueError("num_reads must be >= 1")
    sched = sched or AnnealSchedule()
    betas = sched.betas(inst)
    sym = np.ascontiguousarray(inst.symmetric())
    out = []
    for k in range(num_reads):
        rng = np.random.default_rng(seed ^ k)
        state = rng.integers(0, 2, inst.n).astype(np.int8)
        uniforms = rng.random((sched.sweeps, inst.n))
        best = _anneal(inst.h, sym, betas, state, uniforms)
        out.append(_result(inst, best, "sa", k))
    return out


# ---------------------------------------------------------------------------
# stochastic spiking network

@dataclass(frozen=True)
class SpikingConfig:
    """Parameters of the integer integrate-and-fire network.

    The firing threshold is ``threshold_mantissa * 2**weight_exponent``.
    Per-step noise is uniform on ``[-2**(noise_exponent-1), 2**(noise_exponent-1))``
    shifted by ``noise_mantissa``.
    """

    threshold_mantissa: int = 96
    weight_exponent: int = 6
    noise_mantissa: int = 0
    noise_exponent: int = 7
    weight_scaling: float = 100.0
    sim_steps: int = 5000
    active_window: int = 8
    refractory_window: int = 8
    readout_period: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("firing threshold must be positive")
        if self.active_window < 1 or self.refractory_window < 1:
            raise ValueError("active and refractory windows must be >= 1")
        if self.sim_steps < 1 or not self.weight_scaling > 0:
            raise ValueError("sim_steps and weight_scaling must be positive")
        if self.noise_exponent < 0:
            raise ValueError("noise_exponent must be >= 0")
        if self.readout_period is not None and self.readout_period < 1:
            raise ValueError("readout_period must be >= 1")

    @property
    def threshold(self) -> int:
        return self.threshold_mantissa * 2**self.weight_exponent

    @property
    def period(self) -> int:
        if self.readout_period is not None:
            return self.readout_period
        return max(1, self.sim_steps // 10)

    def noise_bounds(self) -> tuple[int, int]:
        """Half-open integer range of the per-step noise."""
        if self.noise_exponent == 0:
            return self.noise_mantissa, self.noise_mantissa + 1
        half = 2 ** (self.noise_exponent - 1)
        return -half + self.noise_mantissa, half + self.noise_mantissa


@dataclass(frozen=True, eq=False)
class SpikingRun:
    readouts: list[SampleResult]
    saturations: int = 0
    spikes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


@njit(cache=True, nogil=True)
def _sat_add(a, b):
    if b > 0 and a > _I64_MAX - b:
        return _I64_MAX, True
    if b < 0 and a < _I64_MIN - b:
        return _I64_MIN, True
    return a + b, False


@njit(cache=True, nogil=True)
def _spike_run(drive, weights, theta, noise, active_window, refractory_window, period, out_states):
    steps, n = noise.shape
    pot = np.zeros(n, dtype=np.int64)
    phase = np.zeros(n, dtype=np.int8)
    remaining = np.zeros(n, dtype=np.int64)
    inhibition = np.zeros(n, dtype=np.int64)  # sum of weights[i, j] over active j
    spikes = np.zeros(n, dtype=np.int64)
    changed = np.zeros(n, dtype=np.int8)  # +1 turned on, -1 turned off this step
    saturations = 0
    r = 0
    for t in range(1, steps + 1):
        for i in range(n):
            changed[i] = 0
            if phase[i] == ACTIVE:
                remaining[i] -= 1
                if remaining[i] == 0:
                    phase[i] = REFRACTORY
                    remaining[i] = refractory_window
                    changed[i] = -1
                continue
            if phase[i] == REFRACTORY:
                remaining[i] -= 1
                if remaining[i] > 0:
                    continue
                phase[i] = INTEGRATING
            delta = drive[i] - inhibition[i] + np.int64(noise[t - 1, i])
            pot[i], sat = _sat_add(pot[i], delta)
            if sat:
                saturations += 1
            if pot[i] >= theta:
                pot[i] = 0
                phase[i] = ACTIVE
                remaining[i] = active_window
                changed[i] = 1
                spikes[i] += 1
        for j in range(n):
            if changed[j] != 0:
                for i in range(n):
                    inhibition[i] += changed[j] * weights[i, j]
        if t % period == 0:
            for i in range(n):
                out_states[r, i] = 1 if phase[i] == ACTIVE else 0
            r += 1
    return saturations, spikes


def spiking_run(inst: QuboInstance, cfg: SpikingConfig, read_index: int = 0) -> SpikingRun:
    """Simulate the network for ``cfg.sim_steps`` steps and collect periodic readouts.

    Neuron ``i`` receives the constant drive ``round(scaling * -h_i)`` and,
    from every currently active neuron ``j``, ``-round(scaling * q_ij)``, so
    positive couplings inhibit and negative couplings excite. A readout
    records which neurons are in their active window at that step.
    """
    if cfg.weight_scaling * max(np.abs(inst.h).max(), np.abs(inst.q).max()) >= 2.0**62:
        raise OverflowError("weight_scaling too large for the integer accumulator")
    drive = np.rint(-cfg.weight_scaling * inst.h).astype(np.int64)
    weights = np.ascontiguousarray(np.rint(cfg.weight_scaling * inst.symmetric()).astype(np.int64))
    rng = np.random.default_rng(cfg.seed ^ read_index)
    lo, hi = cfg.noise_bounds()
    noise = rng.integers(lo, hi, size=(cfg.sim_steps, inst.n), dtype=np.int32)
    period = cfg.period
    states = np.zeros((cfg.sim_steps // period, inst.n), dtype=np.int8)
    saturations, spikes = _spike_run(
        drive, weights, np.int64(cfg.threshold), noise,
        cfg.active_window, cfg.refractory_window, period, states,
    )
    readouts = [
        _result(inst, s, "spiking", read_index, (k + 1) * period) for k, s in enumerate(states)
    ]
    return SpikingRun(readouts, int(saturations), spikes)


def spiking_sample(inst: QuboInstance, cfg: SpikingConfig, read_index: int = 0) -> list[SampleResult]:
    """Readouts of one spiking simulation in time order."""
    return spiking_run(inst, cfg, read_index).readouts


def spiking_sweep(
    inst: QuboInstance,
    sim_steps: Sequence[int] = SWEEP_SIM_STEPS,
    weight_scalings: Sequence[float] = SWEEP_WEIGHT_SCALINGS,
    seeds_per_cell: int = 100,
    seed: int = 0,
    **cfg_kwargs,
) -> list[SampleResult]:
    """Run every (sim_steps, weight_scaling, repeat) cell of a parameter grid.

    Runs are numbered in grid order (sim_steps outermost) and that number is
    both the ``read_index`` of their readouts and the RNG stream selector.
    With the default grid this is 4 * 5 * 100 = 2000 runs.
    """
    out = []
    k = 0
    for steps in sim_steps:
        for scale in weight_scalings:
            for _ in range(seeds_per_cell):
                cfg = SpikingConfig(sim_steps=steps, weight_scaling=scale, seed=seed, **cfg_kwargs)
                out.extend(spiking_sample(inst, cfg, read_index=k))
                k += 1
    return out


# ---------------------------------------------------------------------------
# sample dumps

SAMPLE_COLUMNS = ("solver", "read_index", "readout_step", "energy", "sparsity", "state")


def format_samples_csv(results: Iterable[SampleResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAMPLE_COLUMNS)
    for r in results:
        writer.writerow([r.solver, r.read_index, r.readout_step, repr(r.energy), r.sparsity, r.state_string()])
    return buf.getvalue()


def write_samples_csv(results: Iterable[SampleResult], path) -> None:
    with open(path, "w", newline="") as f:
        f.write(format_samples_csv(results))
