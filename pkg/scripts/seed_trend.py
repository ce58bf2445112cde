"""10-fold accuracy of all eight method/kind pairs over several seeds.

Checks the qualitative ordering: IM >= CM for MLR and PMR, and RFR the
strongest collective model.

    python3 scripts/seed_trend.py --seeds 0 1 2 3 4 [--k 10]
"""

import argparse
import time

from fogoffload.dataset import build_dataset
from fogoffload.estimators import KINDS
from fogoffload.evaluation import cross_validate
from fogoffload.simulator import GroundTruthModel, default_grid, run_experiment_grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--eta", type=float, default=0.05)
    args = ap.parse_args()

    held = 0
    print(f"{'seed':>4} {'method':>6} " + " ".join(f"{k:>7}" for k in KINDS))
    for seed in args.seeds:
        ds = build_dataset(run_experiment_grid(default_grid(), GroundTruthModel(eta=args.eta), seed))
        t0 = time.perf_counter()
        acc = {}
        for method in ("cm", "im"):
            row = [cross_validate(ds, kind, method, args.k, seed).accuracy for kind in KINDS]
            acc.update({(method, k): a for k, a in zip(KINDS, row)})
            print(f"{seed:>4} {method:>6} " + " ".join(f"{a:7.2f}" for a in row))
        ok = (acc["im", "mlr"] >= acc["cm", "mlr"] and acc["im", "pmr"] >= acc["cm", "pmr"]
              and max(KINDS, key=lambda k: acc["cm", k]) == "rfr")
        held += ok
        print(f"     trend {'holds' if ok else 'broken'} ({time.perf_counter() - t0:.0f} s)")
    print(f"trend held on {held}/{len(args.seeds)} seeds")


if __name__ == "__main__":
    main()
