"""Command-line entry point: ``sparsequbo {learn,solve,trace,oracle}``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import bench


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsequbo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("learn", "learn a dictionary from image patches"),
        ("solve", "solve the 16 patch QUBOs of one image"),
        ("trace", "spiking energy readouts over time for one patch"),
        ("oracle", "run the exactness and oracle suites"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--solver", action="append", choices=bench.SOLVERS,
                       help="solver to run; repeat for several")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "solve":
            p.add_argument("--image-index", type=int)
        if name == "trace":
            p.add_argument("--patch-index", type=int)
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise bench.UsageError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    if args.seed is not None:
        out["seed"] = args.seed
    if args.out is not None:
        out["out"] = args.out
    if args.solver:
        out["solvers"] = list(args.solver)
        out["learn_solver"] = args.solver[0]
    if getattr(args, "image_index", None) is not None:
        out["image_index"] = args.image_index
    if getattr(args, "patch_index", None) is not None:
        out["patch_index"] = args.patch_index
    return out


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = bench.load_config(args.config, _overrides(args))
        if args.command == "learn":
            _, report = bench.cmd_learn(cfg)
            last = report.records[-1]
            print(f"epochs={len(report.records)} mean_error={last.mean_error:.6g} "
                  f"mean_activity={last.mean_activity:.4f} final_lambda={report.final_lambda:.2f}")
        elif args.command == "solve":
            summary = bench.cmd_solve(cfg)
            for s in summary.solvers:
                print(f"{s}: mean_energy={summary.mean_energy(s):.6g} "
                      f"mean_sparsity={summary.mean_sparsity(s):.3f} seconds={summary.seconds[s]:.1f}")
        elif args.command == "trace":
            rows = bench.cmd_trace(cfg)
            print(f"readouts={len(rows)} min_energy={min(r[4] for r in rows):.6g}")
        else:
            results = bench.cmd_oracle(cfg)
            for r in results:
                print(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}")
            if not all(r["passed"] for r in results):
                return 1
    except bench.UsageError as exc:
        print(f"sparsequbo {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported and mapped to exit status 1
        print(f"sparsequbo {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
