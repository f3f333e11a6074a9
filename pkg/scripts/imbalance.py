"""Class-imbalanced training sets: uniform versus empirical class priors in the robust risk.

Training sizes per (domain, class) are drawn from [low, high) for every trial.

    python3 scripts/imbalance.py --trials 3
"""

import argparse
import dataclasses
import logging
from pathlib import Path

from wdrdg.config import load_config
from wdrdg.harness import KNN, WDRDG, run_protocol

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(ROOT / "configs" / "imbalance.yaml"))
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    config = load_config(args.config)
    if args.trials:
        config = dataclasses.replace(config, trials=args.trials)
    print(f"{'priors':>10} {'target':>8} {WDRDG:>8} {KNN:>8}")
    for priors in ("uniform", "empirical"):
        res = run_protocol(dataclasses.replace(config, priors=priors), (WDRDG, KNN), jobs=args.jobs)
        for t in sorted({r.target_domain for r in res.rows}):
            print(f"{priors:>10} {t:>8} {res.mean(WDRDG, target=t):8.4f} {res.mean(KNN, target=t):8.4f}")
        print(f"{priors:>10} {'mean':>8} {res.mean(WDRDG):8.4f} {res.mean(KNN):8.4f}")


if __name__ == "__main__":
    main()
