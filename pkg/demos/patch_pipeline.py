"""Reconstructing an image patch by patch.

Uses the synthetic 28x28 stand-in dataset unless a path to an IDX image file
is given as the first argument.  Writes reconstructions to demo_out/.
"""

import sys

from sparsequbo import bench

overrides = {"out": "demo_out", "sa_reads": "200", "seeds_per_cell": "5"}
if len(sys.argv) > 1:
    overrides["dataset"] = sys.argv[1]
    overrides["initial_lambda"] = "0.1"

cfg = bench.parse_config("", overrides)
summary = bench.cmd_solve(cfg)
for solver in summary.solvers:
    print(f"{solver:8s} mean energy {summary.mean_energy(solver):+.4f}"
          f"  mean active atoms {summary.mean_sparsity(solver):.2f}")
print(f"penalty {summary.lam:.2f}; images in {cfg.out}/")
