"""Unnormalised Hebbian dictionary learning with an adaptive sparsity penalty.

Each epoch codes every training signal with a QUBO solver, moves the active
atoms towards the residual (``D += eta * residual a^T``) and, if the average
fraction of active atoms over the epoch exceeded the target, raises the
penalty by a fixed increment. Atoms are never renormalised, so their norms
settle wherever the target activity level puts them.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .qubo import QuboInstance, ShapeError, as_binary_state, build_qubo
from .samplers import (
    AnnealSchedule,
    SpikingConfig,
    best_sample,
    brute_force,
    simulated_annealing,
    spiking_sample,
)

__all__ = [
    "LearnConfig",
    "EpochRecord",
    "LearnReport",
    "init_dictionary",
    "learn_dictionary",
    "synthetic_training_set",
    "nonnegative_dictionary",
    "make_solver",
    "format_dictionary",
    "parse_dictionary",
    "save_dictionary",
    "load_dictionary",
]

log = logging.getLogger(__name__)

# a solver maps (instance, seed) to a binary code
Solver = Callable[[QuboInstance, int], np.ndarray]


@dataclass(frozen=True)
class LearnConfig:
    eta: float = 0.01
    target_sparsity: float = 12 / 64
    initial_lambda: float = 0.1
    lambda_increment: float = 0.1
    epochs: int = 10
    solver: Union[str, Solver] = "sa"
    seed: int = 0
    shuffle: bool = False
    # options for the built-in solvers
    sa_reads: int = 10
    sa_sweeps: int = 200
    spiking: SpikingConfig = field(default_factory=lambda: SpikingConfig(sim_steps=2000, weight_scaling=100.0))

    def __post_init__(self):
        if not 0 < self.target_sparsity < 1:
            raise ValueError("target_sparsity must lie in (0, 1)")
        # eta == 0 is accepted as a frozen-dictionary run
        if not self.eta >= 0:
            raise ValueError("eta must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.initial_lambda > 0:
            raise ValueError("initial_lambda must be positive")


def make_solver(cfg: LearnConfig) -> Solver:
    """Resolve ``cfg.solver`` into a callable returning the best code found."""
    if callable(cfg.solver):
        return cfg.solver
    if cfg.solver == "sa":
        sched = AnnealSchedule(sweeps=cfg.sa_sweeps)

        def solve(inst, seed):
            # the schedule is undefined on an all-zero QUBO and every code scores 0
            if not (inst.h.any() or inst.q.any()):
                return np.zeros(inst.n, dtype=np.int8)
            return best_sample(simulated_annealing(inst, sched, cfg.sa_reads, seed)).state

        return solve
    if cfg.solver == "brute":
        return lambda inst, seed: brute_force(inst).state
    if cfg.solver == "spiking":
        base = cfg.spiking

        def solve(inst, seed):
            run_cfg = SpikingConfig(**{**base.__dict__, "seed": seed})
            return best_sample(spiking_sample(inst, run_cfg)).state

        return solve
    raise ValueError(f"unknown solver {cfg.solver!r}; expected 'sa', 'spiking' or 'brute'")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_error: float
    mean_activity: float
    lam: float
    norms: np.ndarray


@dataclass
class LearnReport:
    records: list[EpochRecord] = field(default_factory=list)
    # penalty the next epoch would use
    final_lambda: float = float("nan")

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self.records])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.mean_error for r in self.records])

    @property
    def activities(self) -> np.ndarray:
        return np.array([r.mean_activity for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = len(self.records[0].norms) if self.records else 0
        w.writerow(["epoch", "mean_error", "mean_activity", "lambda"] + [f"norm_{k}" for k in range(n)])
        for r in self.records:
            w.writerow([r.epoch, repr(r.mean_error), repr(r.mean_activity), repr(r.lam)]
                       + [repr(float(v)) for v in r.norms])
        return buf.getvalue()


def init_dictionary(m: int, n: int, norm_low: float = 0.01, norm_high: float = 0.2, seed: int = 0) -> np.ndarray:
    """Gaussian atoms rescaled to norms drawn uniformly from [norm_low, norm_high]."""
    if not 0 < norm_low <= norm_high:
        raise ValueError(f"need 0 < norm_low <= norm_high, got {norm_low}, {norm_high}")
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((m, n))
    norms = np.linalg.norm(d, axis=0)
    while np.any(norms == 0):  # pragma: no cover - measure zero
        d[:, norms == 0] = rng.standard_normal((m, int(np.sum(norms == 0))))
        norms = np.linalg.norm(d, axis=0)
    target = rng.uniform(norm_low, norm_high, n) if norm_high > norm_low else np.full(n, norm_low)
    return d * (target / norms)


def nonnegative_dictionary(m: int, n: int, norm_low: float = 0.5, norm_high: float = 1.0, seed: int = 0) -> np.ndarray:
    """Ground-truth atoms with nonnegative entries, like image-patch features."""
    rng = np.random.default_rng(seed)
    d = np.abs(rng.standard_normal((m, n)))
    return d * (rng.uniform(norm_low, norm_high, n) / np.linalg.norm(d, axis=0))


def synthetic_training_set(true_dict, b: int, k_active: int, noise_sigma: float = 0.0, seed: int = 0) -> np.ndarray:
    """``b`` signals, each a sum of ``k_active`` random atoms plus Gaussian noise, clipped to [0, 1]."""
    true_dict = np.asarray(true_dict, dtype=np.float64)
    m, n = true_dict.shape
    if not 1 <= k_active <= n:
        raise ValueError(f"k_active must lie in [1, {n}], got {k_active}")
    if b < 1:
        raise ValueError("b must be >= 1")
    rng = np.random.default_rng(seed)
    codes = np.zeros((b, n))
    for i in range(b):
        codes[i, rng.choice(n, size=k_active, replace=False)] = 1.0
    data = codes @ true_dict.T
    if noise_sigma > 0:
        data = data + rng.normal(0.0, noise_sigma, data.shape)
    return np.clip(data, 0.0, 1.0)


def _sample_seed(seed: int, epoch: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, epoch, i]).generate_state(1, np.uint64)[0] >> 1)


def learn_dictionary(d, data, cfg: LearnConfig) -> tuple[np.ndarray, LearnReport]:
    d = np.array(d, dtype=np.float64)
    data = np.asarray(data, dtype=np.float64)
    if d.ndim != 2 or data.ndim != 2 or data.shape[1] != d.shape[0]:
        raise ShapeError(f"training data {data.shape} does not match dictionary {d.shape}")
    b, n = data.shape[0], d.shape[1]
    if b < 1:
        raise ValueError("training set is empty")
    solve = make_solver(cfg)
    bumps = 0
    report = LearnReport()
    order_rng = np.random.default_rng(cfg.seed)

    for epoch in range(1, cfg.epochs + 1):
        # counted rather than accumulated so lambda is exactly initial + k * increment
        lam = cfg.initial_lambda + bumps * cfg.lambda_increment
        order = order_rng.permutation(b) if cfg.shuffle else range(b)
        activity_count = 0
        error_sum = 0.0
        for i in order:
            x = data[i]
            a = as_binary_state(solve(build_qubo(d, x, lam), _sample_seed(cfg.seed, epoch, int(i))), n)
            residual = x - d @ a
            error_sum += 0.5 * float(residual @ residual)
            active = a.astype(bool)
            d[:, active] += cfg.eta * residual[:, None]
            if not np.all(np.isfinite(d)):
                raise FloatingPointError(f"dictionary became non-finite at epoch {epoch}, sample {i}")
            activity_count += int(a.sum())
        activity = activity_count / (n * b)
        report.records.append(EpochRecord(epoch, error_sum / b, activity, lam, np.linalg.norm(d, axis=0)))
        log.info("epoch %d: error %.5f activity %.4f lambda %.2f", epoch, error_sum / b, activity, lam)
        if activity > cfg.target_sparsity:
            bumps += 1
    report.final_lambda = cfg.initial_lambda + bumps * cfg.lambda_increment
    return d, report


# ---------------------------------------------------------------------------
# plain-text serialisation

def format_dictionary(d) -> str:
    d = np.asarray(d, dtype=np.float64)
    lines = [f"m {d.shape[0]} n {d.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in d]
    return "\n".join(lines) + "\n"


def parse_dictionary(text: str) -> np.ndarray:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 4 or rows[0][0] != "m" or rows[0][2] != "n":
        raise ValueError("dictionary text must start with 'm <m> n <n>'")
    m, n = int(rows[0][1]), int(rows[0][3])
    body = rows[1:]
    if len(body) != m or any(len(r) != n for r in body):
        raise ValueError(f"dictionary body does not match header m={m} n={n}")
    return np.array([[float(v) for v in r] for r in body])


def save_dictionary(d, path) -> None:
    Path(path).write_text(format_dictionary(d))


def load_dictionary(path) -> np.ndarray:
    return parse_dictionary(Path(path).read_text())
