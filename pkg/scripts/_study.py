"""Shared driver for the experiment scripts in this directory."""
from __future__ import annotations

import argparse
import dataclasses
import os
import time
from collections import defaultdict
from pathlib import Path

from rlasso.bench import read_config, run_experiment, write_csv, write_config

ROOT = Path(__file__).resolve().parent.parent


def parse_args(study: str, doc: str) -> argparse.Namespace:
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--config", type=Path, help=f"override configs/{study}_<scale>.json")
    p.add_argument("--trials", type=int, help="override the trial count (quick looks)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", type=Path, default=ROOT / "results")
    args = p.parse_args()
    args.config = args.config or ROOT / "configs" / f"{study}_{args.scale}.json"
    args.stem = f"{study}_{args.scale}"
    return args


def load(args):
    cfg = read_config(args.config)
    if args.trials:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    return cfg


def run(cfg, args, extra=()):
    """Run, save CSV plus the effective config next to it, and return the records."""
    t0 = time.perf_counter()
    records = run_experiment(cfg, threads=args.threads) + list(extra)
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(records, args.out / f"{args.stem}.csv")
    write_config(cfg, args.out / f"{args.stem}.config.json")
    print(f"{len(records)} records in {time.perf_counter() - t0:.1f}s -> {args.out / (args.stem + '.csv')}")
    return records


def table(records, column="mean_rel_error") -> None:
    """Print one row per sweep value and one column per decoder."""
    grid = defaultdict(dict)
    decoders = []
    for r in records:
        grid[r.sweep_value][r.decoder] = getattr(r, column)
        if r.decoder not in decoders:
            decoders.append(r.decoder)
    width = max(12, *(len(d) for d in decoders))
    print(f"{'value':>10} " + " ".join(f"{d:>{width}}" for d in decoders))
    for value, row in grid.items():
        cells = " ".join(f"{row[d]:>{width}.4g}" if d in row else " " * width for d in decoders)
        print(f"{str(value):>10} {cells}")
