"""Command line: generate | train | evaluate | compare."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .dataset import DatasetFormatError, build_dataset, raw_data_points, read_dataset, write_dataset
from .estimators import KINDS
from .evaluation import (
    ACCURACY_MODES,
    METHODS,
    EvalPlan,
    compare_reports,
    estimator_from_dict,
    format_comparison,
    read_reports,
    run_plan,
    summarize,
    train_estimator,
    write_reports,
)
from .simulator import run_experiment_grid, write_traces

MODEL_FORMAT = "fogoffload-estimator"


class CliError(Exception):
    pass


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _dataset(path: str):
    if not Path(path).is_file():
        raise CliError(f"dataset file not found: {path}")
    return read_dataset(path)


def cmd_generate(args) -> int:
    cfg = _config(args)
    traces = run_experiment_grid(cfg.grid, cfg.ground_truth, cfg.seed, quick=args.quick)
    ds = build_dataset(traces)
    write_dataset(ds, args.out)
    if args.traces:
        write_traces(traces, args.traces)
    samples = np.array([len(t) for t in traces])
    print(f"instances: {len(ds)}")
    print(f"mean runtime samples per offload: {samples.mean():.2f}")
    print(f"raw data points: {raw_data_points(traces)}")
    print(f"wrote {args.out}")
    return 0


def save_estimator(est, path) -> None:
    doc = {"format": MODEL_FORMAT, "version": 1, **est.to_dict()}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_estimator(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise CliError(f"{path}: not an estimator file")
    return estimator_from_dict(doc)


def cmd_train(args) -> int:
    cfg = _config(args)
    ds = _dataset(args.dataset)
    est = train_estimator(ds, args.kind, args.method, params=cfg.models, seed=cfg.seed, options=cfg.features)
    save_estimator(est, args.out)
    n_models = 5 if args.method == "im" else 1
    print(f"trained {args.method.upper()}-{args.kind.upper()} ({n_models} model(s)) on {len(ds)} instances")
    print(f"wrote {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    ds = _dataset(args.dataset)
    plan = EvalPlan(
        kinds=tuple(args.kind) if args.kind else cfg.plan.kinds,
        methods=tuple(args.method) if args.method else cfg.plan.methods,
        train_fractions=tuple(args.train_fraction) if args.train_fraction is not None else cfg.plan.train_fractions,
        k_values=tuple(args.k) if args.k is not None else cfg.plan.k_values,
    )
    settings = cfg.settings
    if args.accuracy_mode:
        settings = replace(settings, accuracy_mode=args.accuracy_mode)
    reports = run_plan(ds, plan, cfg.seed, settings)
    write_reports(reports, args.out)
    text = summarize(reports)
    if args.summary:
        Path(args.summary).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"wrote {len(reports)} report rows to {args.out}")
    return 0


def cmd_compare(args) -> int:
    if not Path(args.report).is_file():
        raise CliError(f"report file not found: {args.report}")
    sys.stdout.write(format_comparison(compare_reports(read_reports(args.report))))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogoffload", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate the experiment grid and write a dataset CSV")
    g.add_argument("--config", help="experiment JSON (defaults built in)")
    g.add_argument("--out", required=True, help="dataset CSV to write")
    g.add_argument("--traces", help="optional JSON-lines trace dump")
    g.add_argument("--seed", type=int)
    g.add_argument("--quick", action="store_true", help="roughly 10x smaller grid")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit a CM or IM estimator and save it as JSON")
    t.add_argument("--dataset", required=True)
    t.add_argument("--kind", required=True, choices=KINDS)
    t.add_argument("--method", required=True, choices=METHODS)
    t.add_argument("--out", required=True, help="model JSON to write")
    t.add_argument("--config", help="experiment JSON for hyperparameters")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="hold-out and k-fold evaluation over kinds and methods")
    e.add_argument("--dataset", required=True)
    e.add_argument("--out", required=True, help="report CSV to write")
    e.add_argument("--summary", help="text summary path (stdout if omitted)")
    e.add_argument("--kind", action="append", choices=KINDS)
    e.add_argument("--method", action="append", choices=METHODS)
    e.add_argument("--k", action="append", type=int)
    e.add_argument("--train-fraction", action="append", type=float)
    e.add_argument("--accuracy-mode", choices=ACCURACY_MODES)
    e.add_argument("--config", help="experiment JSON for the plan and hyperparameters")
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="best kind per method and IM-vs-CM deltas")
    c.add_argument("--report", required=True)
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, DatasetFormatError, ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
