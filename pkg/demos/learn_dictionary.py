"""Learning a binary dictionary from synthetic signals.

Signals are sums of three atoms from a hidden nonnegative dictionary.
Each epoch reports reconstruction error, activity and the penalty used.
"""

import logging

from sparsequbo.dictlearn import (
    LearnConfig,
    init_dictionary,
    learn_dictionary,
    nonnegative_dictionary,
    synthetic_training_set,
)

logging.basicConfig(level=logging.INFO, format="%(message)s")

truth = nonnegative_dictionary(16, 32, seed=1)
data = synthetic_training_set(truth, b=200, k_active=3, noise_sigma=0.01, seed=2)
cfg = LearnConfig(eta=0.015, target_sparsity=0.15, initial_lambda=0.05, epochs=20, solver="sa")

d, report = learn_dictionary(init_dictionary(16, 32, seed=3), data, cfg)
print(f"error {report.errors[0]:.4f} -> {report.errors[-1]:.4f}")
print(f"activity in last epoch {report.activities[-1]:.3f}, final lambda {report.final_lambda:.2f}")
