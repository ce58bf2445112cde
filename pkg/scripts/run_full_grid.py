"""Full protocol on the default grid: generate, hold-out + k-fold for every
method/kind pair, then the CM vs IM comparison.

    python3 scripts/run_full_grid.py --out results/ [--seed 2019] [--quick]
"""

import argparse
import time
from pathlib import Path

import numpy as np

from fogoffload.config import ExperimentConfig, load_config
from fogoffload.dataset import build_dataset, raw_data_points, write_dataset
from fogoffload.evaluation import compare_reports, format_comparison, run_plan, summarize, write_reports
from fogoffload.simulator import run_experiment_grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    seed = cfg.seed if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    traces = run_experiment_grid(cfg.grid, cfg.ground_truth, seed, quick=args.quick)
    ds = build_dataset(traces)
    write_dataset(ds, out / "dataset.csv")
    print(f"{len(ds)} instances, mean {np.mean([len(t) for t in traces]):.1f} samples, "
          f"{raw_data_points(traces):,} raw points ({time.perf_counter() - t0:.1f} s)")

    t0 = time.perf_counter()
    reports = run_plan(ds, cfg.plan, seed, cfg.settings)
    write_reports(reports, out / "report.csv")
    text = summarize(reports) + "\n" + format_comparison(compare_reports(reports))
    (out / "summary.txt").write_text(text)
    print(text)
    print(f"evaluation took {time.perf_counter() - t0:.1f} s; wrote {out}/")


if __name__ == "__main__":
    main()
