"""MAE versus training fraction for one method/kind pair, averaged over seeds.

    python3 scripts/holdout_sweep.py --kind rfr --method cm --seeds 0 1 2
"""

import argparse

import numpy as np

from fogoffload.dataset import build_dataset
from fogoffload.estimators import KINDS
from fogoffload.evaluation import METHODS, holdout_evaluate
from fogoffload.simulator import GroundTruthModel, default_grid, run_experiment_grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", choices=KINDS, default="pmr")
    ap.add_argument("--method", choices=METHODS, default="im")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.5, 0.6, 0.7, 0.8, 0.9])
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()

    rows = {f: [] for f in args.fractions}
    for seed in args.seeds:
        ds = build_dataset(run_experiment_grid(default_grid(), GroundTruthModel(), seed, quick=args.quick))
        for f in args.fractions:
            r = holdout_evaluate(ds, args.kind, args.method, f, seed)
            rows[f].append((r.mae, r.accuracy))
    print(f"{args.method.upper()}-{args.kind.upper()} over seeds {args.seeds}")
    print(f"{'train':>6} {'MAE (s)':>9} {'sd':>7} {'acc (%)':>8}")
    for f, vals in rows.items():
        m = np.array(vals)
        print(f"{f:6.2f} {m[:, 0].mean():9.3f} {m[:, 0].std():7.3f} {m[:, 1].mean():8.2f}")


if __name__ == "__main__":
    main()
