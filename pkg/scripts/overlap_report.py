"""Pairwise overlap of the class uncertainty sets for a config (default: five classes on a ring).

For every class pair prints the sum of the two radii next to the W2 distance
between the barycenters; a pair overlaps when the sum is larger.

    python3 scripts/overlap_report.py
    python3 scripts/overlap_report.py --config configs/stress.yaml --csv overlap.csv
"""

import argparse
from pathlib import Path

from wdrdg.config import load_config
from wdrdg.harness import sets_for_config
from wdrdg.uncertainty import overlap_report, write_overlap_csv

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(ROOT / "configs" / "overlap_k5.yaml"))
    ap.add_argument("--trial", type=int, default=0)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()

    sets = sets_for_config(load_config(args.config), trial=args.trial)
    for s in sets:
        print(f"class {s.k}: radius {s.radius:.4f}, {s.center.size} atoms")
    print()
    records = overlap_report(sets)
    print(f"{'pair':>6} {'radius sum':>11} {'bary W2':>9}  overlap")
    for r in records:
        print(f"{r.class_i:>3},{r.class_j:<2} {r.radius_sum:11.4f} {r.barycenter_w2:9.4f}  {'yes' if r.overlapping else 'no'}")
    print(f"\n{sum(r.overlapping for r in records)} of {len(records)} pairs overlap")
    if args.csv:
        write_overlap_csv(records, args.csv)


if __name__ == "__main__":
    main()
