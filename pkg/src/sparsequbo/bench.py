"""Experiment flow: learn a dictionary, solve the 16 patch QUBOs of an image
with each sampler, and trace spiking energies over time.

Every command reads an :class:`ExperimentConfig` and writes its outputs to
``config.out``. Numeric outputs are CSV and contain no timing information,
so reruns with the same configuration produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import os
import time
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dictlearn, imaging, samplers, suites
from .qubo import build_qubo, dump_qubo

log = logging.getLogger(__name__)

THREADS_ENV = "SPARSEQUBO_THREADS"
SOLVERS = ("sa", "spiking", "brute")


class UsageError(ValueError):
    """Bad or missing user input; the CLI maps this to exit status 2."""


@dataclass
class ExperimentConfig:
    dataset: str = "synthetic"
    image_count: int = 20
    dictionary: str = ""
    m: int = 49
    n: int = 64
    # synthetic data
    k_active: int = 3
    noise_sigma: float = 0.01
    # learning
    eta: float = 0.01
    target_sparsity: float = 12 / 64
    # 0.1 in the fMNIST protocol; tiny initial atoms on the synthetic set need less
    initial_lambda: float = 0.02
    lambda_increment: float = 0.1
    epochs: int = 10
    learn_solver: str = "sa"
    learn_sa_reads: int = 10
    learn_sa_sweeps: int = 200
    # solving; "auto" uses the penalty reached by dictionary learning
    lam: str = "auto"
    solvers: list = field(default_factory=lambda: ["sa", "spiking"])
    sa_reads: int = 1000
    sa_sweeps: int = 1000
    sim_steps: list = field(default_factory=lambda: list(samplers.SWEEP_SIM_STEPS))
    weight_scalings: list = field(default_factory=lambda: list(samplers.SWEEP_WEIGHT_SCALINGS))
    seeds_per_cell: int = 100
    readout_period: int = 0  # 0 selects sim_steps // 10
    active_window: int = 8
    refractory_window: int = 8
    threshold_mantissa: int = 96
    weight_exponent: int = 6
    noise_mantissa: int = 0
    noise_exponent: int = 7
    image_index: int = 0
    patch_index: int = 0
    # oracle suites
    oracle_count: int = 20
    oracle_n: int = 16
    oracle_reads: int = 100
    oracle_sweeps: int = 1000
    out: str = "out"
    seed: int = 0

    @property
    def spiking_runs(self) -> int:
        return len(self.sim_steps) * len(self.weight_scalings) * self.seeds_per_cell

    def spiking_kwargs(self) -> dict:
        return dict(
            threshold_mantissa=self.threshold_mantissa,
            weight_exponent=self.weight_exponent,
            noise_mantissa=self.noise_mantissa,
            noise_exponent=self.noise_exponent,
            active_window=self.active_window,
            refractory_window=self.refractory_window,
            readout_period=self.readout_period or None,
        )

    def learn_config(self) -> dictlearn.LearnConfig:
        return dictlearn.LearnConfig(
            eta=self.eta,
            target_sparsity=self.target_sparsity,
            initial_lambda=self.initial_lambda,
            lambda_increment=self.lambda_increment,
            epochs=self.epochs,
            solver=self.learn_solver,
            seed=self.seed,
            sa_reads=self.learn_sa_reads,
            sa_sweeps=self.learn_sa_sweeps,
        )


def _convert(value: str, typ):
    if typ in ("list", list) or typing.get_origin(typ) is list:
        return [v.strip() for v in value.split(",") if v.strip()]
    if typ in ("int", int):
        return int(value)
    if typ in ("float", float):
        return float(value)
    return value


_LIST_ITEM_TYPES = {"solvers": str, "sim_steps": int, "weight_scalings": float}


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` comments, comma-separated lists).

    ``overrides`` take precedence over the file.
    """
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in types:
            raise UsageError(f"config line {lineno}: unknown or malformed entry {raw.strip()!r}")
        values[key] = value.strip()
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kwargs = {}
    for key, value in values.items():
        if key not in types:
            raise UsageError(f"unknown config key {key!r}")
        try:
            if isinstance(value, str):
                value = _convert(value, types[key])
            if key in _LIST_ITEM_TYPES:
                value = [_LIST_ITEM_TYPES[key](v) for v in value]
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        kwargs[key] = value
    cfg = ExperimentConfig(**kwargs)
    bad = [s for s in cfg.solvers if s not in SOLVERS]
    if bad:
        raise UsageError(f"unknown solver(s) {bad}; choose from {SOLVERS}")
    return cfg


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    if path is None:
        return parse_config("", overrides)
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    text = p.read_text()
    if not any(ln.split("#", 1)[0].strip() for ln in text.splitlines()):
        raise UsageError(f"config file {path} is empty")
    return parse_config(text, overrides)


# ---------------------------------------------------------------------------
# data

def synthetic_images(count: int, k_active: int = 3, noise_sigma: float = 0.01, seed: int = 0):
    """Stand-in image set: every 7x7 patch is a sum of ground-truth atoms.

    Returns ``(images, true_dictionary)``.
    """
    truth = dictlearn.nonnegative_dictionary(imaging.PATCH_SIDE**2, 64, seed=seed)
    patches = dictlearn.synthetic_training_set(truth, count * 16, k_active, noise_sigma, seed=seed + 1)
    images = np.stack([imaging.unpatchify(p) for p in patches.reshape(count, 16, -1)])
    return images, truth


def load_images(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.dataset == "synthetic":
        return synthetic_images(cfg.image_count, cfg.k_active, cfg.noise_sigma, cfg.seed)[0]
    path = Path(cfg.dataset)
    if not path.is_file():
        raise UsageError(f"dataset not found: {cfg.dataset}")
    return imaging.load_idx(path)


def training_set(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.dataset == "synthetic" and cfg.m != imaging.PATCH_SIDE**2:
        truth = dictlearn.nonnegative_dictionary(cfg.m, cfg.n, seed=cfg.seed)
        return dictlearn.synthetic_training_set(truth, cfg.image_count * 16, cfg.k_active,
                                                cfg.noise_sigma, seed=cfg.seed + 1)
    images = load_images(cfg)[: cfg.image_count]
    return np.concatenate([imaging.patchify(im) for im in images])


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------------------
# learn

def cmd_learn(cfg: ExperimentConfig):
    data = training_set(cfg)
    if cfg.dictionary:
        if not Path(cfg.dictionary).is_file():
            raise UsageError(f"dictionary not found: {cfg.dictionary}")
        d0 = dictlearn.load_dictionary(cfg.dictionary)
    else:
        d0 = dictlearn.init_dictionary(data.shape[1], cfg.n, seed=cfg.seed)
    d, report = dictlearn.learn_dictionary(d0, data, cfg.learn_config())
    out = Path(cfg.out)
    _write(out / "dictionary.txt", dictlearn.format_dictionary(d))
    _write(out / "learn_report.csv", report.to_csv())
    _write(out / "final_lambda.txt", f"{report.final_lambda!r}\n")
    return d, report


def _penalty(cfg: ExperimentConfig, learned: float | None = None) -> float:
    if cfg.lam != "auto":
        try:
            lam = float(cfg.lam)
        except ValueError:
            raise UsageError(f"lam must be a number or 'auto', got {cfg.lam!r}") from None
        if lam < 0:
            raise UsageError("lam must be >= 0")
        return lam
    if learned is not None:
        return learned
    if cfg.dictionary:
        saved = Path(cfg.dictionary).with_name("final_lambda.txt")
        if saved.is_file():
            return float(saved.read_text().strip())
    return cfg.initial_lambda


def _dictionary_for_solve(cfg: ExperimentConfig) -> tuple[np.ndarray, float]:
    """Dictionary and sparsity penalty for solving, learning the dictionary if none is given."""
    if cfg.dictionary:
        if not Path(cfg.dictionary).is_file():
            raise UsageError(f"dictionary not found: {cfg.dictionary}")
        return dictlearn.load_dictionary(cfg.dictionary), _penalty(cfg)
    log.info("no dictionary given; learning one first")
    d, report = cmd_learn(cfg)
    return d, _penalty(cfg, report.final_lambda)


# ---------------------------------------------------------------------------
# solve

@dataclass
class RunSummary:
    solvers: list
    best_energy: dict  # solver -> (16,) best QUBO energy per patch
    best_sparsity: dict  # solver -> (16,) active count of the best state
    best_states: dict  # solver -> (16, n)
    offsets: np.ndarray
    seconds: dict
    lam: float = 0.0

    def mean_energy(self, solver: str) -> float:
        return float(np.mean(self.best_energy[solver]))

    def mean_sparsity(self, solver: str) -> float:
        return float(np.mean(self.best_sparsity[solver]))

    def patches_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["solver", "patch", "best_energy", "best_objective", "best_sparsity"])
        for s in self.solvers:
            for p in range(len(self.offsets)):
                e = float(self.best_energy[s][p])
                w.writerow([s, p, repr(e), repr(e + float(self.offsets[p])), int(self.best_sparsity[s][p])])
        return buf.getvalue()

    def means_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["solver", "mean_energy", "mean_sparsity"])
        for s in self.solvers:
            w.writerow([s, repr(self.mean_energy(s)), repr(self.mean_sparsity(s))])
        return buf.getvalue()


def patch_seed(master: int, patch_index: int) -> int:
    return master + 1000 * patch_index


def sample_patch(inst, solver: str, cfg: ExperimentConfig, seed: int) -> list:
    if solver == "sa":
        if not (inst.h.any() or inst.q.any()):
            return [samplers.SampleResult(np.zeros(inst.n, dtype=np.int8), 0.0, "sa")]
        return samplers.simulated_annealing(inst, samplers.AnnealSchedule(cfg.sa_sweeps), cfg.sa_reads, seed)
    if solver == "spiking":
        return samplers.spiking_sweep(inst, cfg.sim_steps, cfg.weight_scalings, cfg.seeds_per_cell,
                                      seed, **cfg.spiking_kwargs())
    if solver == "brute":
        return [samplers.brute_force(inst)]
    raise UsageError(f"unknown solver {solver!r}")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer") from None


def cmd_solve(cfg: ExperimentConfig, image_index: int | None = None, dictionary=None) -> RunSummary:
    """Solve the 16 patch QUBOs of one image with each configured solver."""
    idx = cfg.image_index if image_index is None else image_index
    images = load_images(cfg)
    if not 0 <= idx < len(images):
        raise UsageError(f"image_index {idx} out of range for {len(images)} images")
    if dictionary is None:
        d, lam = _dictionary_for_solve(cfg)
    else:
        d, lam = np.asarray(dictionary, dtype=np.float64), _penalty(cfg)
    if d.shape[0] != imaging.PATCH_SIDE**2:
        raise UsageError(f"dictionary has {d.shape[0]} rows; image patches need {imaging.PATCH_SIDE**2}")
    image = images[idx]
    patches = imaging.patchify(image)
    insts = [build_qubo(d, x, lam) for x in patches]
    out = Path(cfg.out)
    (out / "qubos").mkdir(parents=True, exist_ok=True)
    for p, inst in enumerate(insts):
        dump_qubo(inst, out / "qubos" / f"patch{p:02d}.txt")

    summary = RunSummary(list(cfg.solvers), {}, {}, {}, np.array([i.offset for i in insts]), {}, lam)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        for solver in cfg.solvers:
            t0 = time.perf_counter()
            runs = list(pool.map(lambda pi: sample_patch(pi[1], solver, cfg, patch_seed(cfg.seed, pi[0])),
                                 enumerate(insts)))
            summary.seconds[solver] = time.perf_counter() - t0
            bests = [samplers.best_sample(r) for r in runs]
            summary.best_energy[solver] = np.array([b.energy for b in bests])
            summary.best_sparsity[solver] = np.array([b.sparsity for b in bests])
            summary.best_states[solver] = np.stack([b.state for b in bests])
            for p, r in enumerate(runs):
                _write(out / "samples" / f"{solver}_patch{p:02d}.csv", samplers.format_samples_csv(r))
            recon = imaging.unpatchify(summary.best_states[solver] @ d.T)
            _write(out / f"recon_{solver}.pgm", imaging.format_pgm(recon))
            log.info("%s: mean energy %.4f, mean sparsity %.2f, %.1fs", solver,
                     summary.mean_energy(solver), summary.mean_sparsity(solver), summary.seconds[solver])
    _write(out / "original.pgm", imaging.format_pgm(image))
    _write(out / "summary_patches.csv", summary.patches_csv())
    _write(out / "summary.csv", summary.means_csv())
    _write(out / "timing.txt", "".join(f"{s} {summary.seconds[s]:.3f}\n" for s in cfg.solvers))
    return summary


# ---------------------------------------------------------------------------
# trace

def trace_rows(inst, cfg: ExperimentConfig) -> list[tuple]:
    """(sim_steps, weight_scaling, read_index, readout_step, energy) for every readout of the sweep."""
    rows = []
    k = 0
    for steps in cfg.sim_steps:
        for scale in cfg.weight_scalings:
            for _ in range(cfg.seeds_per_cell):
                sc = samplers.SpikingConfig(sim_steps=steps, weight_scaling=scale, seed=cfg.seed,
                                            **cfg.spiking_kwargs())
                rows += [(steps, scale, k, r.readout_step, r.energy)
                         for r in samplers.spiking_sample(inst, sc, read_index=k)]
                k += 1
    return rows


def cmd_trace(cfg: ExperimentConfig, patch_index: int | None = None, dictionary=None) -> list[tuple]:
    p = cfg.patch_index if patch_index is None else patch_index
    if not 0 <= p < 16:
        raise UsageError(f"patch_index must lie in [0, 16), got {p}")
    images = load_images(cfg)
    if not 0 <= cfg.image_index < len(images):
        raise UsageError(f"image_index {cfg.image_index} out of range")
    if dictionary is None:
        d, lam = _dictionary_for_solve(cfg)
    else:
        d, lam = np.asarray(dictionary, dtype=np.float64), _penalty(cfg)
    inst = build_qubo(d, imaging.patchify(images[cfg.image_index])[p], lam)
    rows = trace_rows(inst, cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sim_steps", "weight_scaling", "read_index", "readout_step", "energy"])
    for steps, scale, k, step, e in rows:
        w.writerow([steps, repr(float(scale)), k, step, repr(e)])
    _write(Path(cfg.out) / f"trace_patch{p:02d}.csv", buf.getvalue())
    return rows


# ---------------------------------------------------------------------------
# oracle

def cmd_oracle(cfg: ExperimentConfig) -> list[dict]:
    """Run the exactness, annealing-vs-exhaustive and greedy-bound suites."""
    if cfg.oracle_n > samplers.MAX_BRUTE_FORCE_VARS:
        raise samplers.CapacityError(
            f"oracle_n={cfg.oracle_n} exceeds the brute-force limit of {samplers.MAX_BRUTE_FORCE_VARS}")
    required = int(np.ceil(0.95 * cfg.oracle_count))
    results = [
        suites.exactness_suite(seed=cfg.seed),
        suites.sa_oracle_suite(cfg.oracle_count, cfg.oracle_n, cfg.oracle_reads, cfg.oracle_sweeps,
                               seed=cfg.seed, required=required),
        suites.greedy_bound_suite(cfg.oracle_count, min(cfg.oracle_n, 20), seed=cfg.seed),
    ]
    lines = []
    for r in results:
        detail = " ".join(f"{k}={v}" for k, v in r.items() if k not in ("name", "passed", "seconds"))
        lines.append(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']} {detail}")
    _write(Path(cfg.out) / "oracle_report.txt", "\n".join(lines) + "\n")
    return results
