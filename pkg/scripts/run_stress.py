"""Rotated-Gaussian stress run: WDRDG with and without test-time adaptation, and pooled 1-NN.

    python3 scripts/run_stress.py --out runs/stress
    python3 scripts/run_stress.py --sizes 2 --out runs/few_shot
"""

import argparse
import dataclasses
import logging
from pathlib import Path

from wdrdg.config import load_config
from wdrdg.harness import (
    KNN,
    METHODS,
    WDRDG,
    WDRDG_NO_TTA,
    aggregate,
    paired_ablation,
    run_protocol,
    write_aggregate_csv,
    write_results_csv,
)

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(ROOT / "configs" / "stress.yaml"))
    ap.add_argument("--sizes", type=int, nargs="+", default=None, help="override train sizes per class")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None, help="directory for results.csv and aggregate.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    config = load_config(args.config)
    if args.sizes:
        config = dataclasses.replace(config, train_sizes=tuple(args.sizes))
    if args.trials:
        config = dataclasses.replace(config, trials=args.trials)
    res = run_protocol(config, METHODS, jobs=args.jobs)

    print(f"{'size':>6} {WDRDG:>12} {WDRDG_NO_TTA:>12} {KNN:>12}")
    for s in config.train_sizes:
        print(f"{s:>6} " + " ".join(f"{res.mean(m, size=s):12.4f}" for m in (WDRDG, WDRDG_NO_TTA, KNN)))
    print()
    print(f"{'target':>8} {'size':>6} {'no TTA':>8} {'TTA':>8} {'gain':>8}")
    for target, size, no, yes, gain in paired_ablation(res):
        print(f"{target:>8} {size:>6} {no:8.4f} {yes:8.4f} {gain:+8.4f}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(res.rows, out / "results.csv")
        write_aggregate_csv(aggregate(res.rows), out / "aggregate.csv")


if __name__ == "__main__":
    main()
