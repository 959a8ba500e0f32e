#!/usr/bin/env python3
"""Scheduling study: the joint algorithm against random pilots and equal
power, plus the fairness/mean-SE tradeoff as the fractional exponent sweeps
0 -> 1. Prints the spread metric (max - min per-UE SE) per strategy.

    python scripts/run_power_control_study.py --config configs/paper_full_scale.json
"""

import argparse
import pathlib
from collections import defaultdict

from scfsim.config import SimConfig, load_config
from scfsim.harness import emit_results, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()

    cfg = load_config(args.config) if args.config else SimConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("cdf-algorithm", "cdf-vs-nu"):
        table = run_experiment(name, cfg)
        path = out / f"{name}.csv"
        emit_results(table, "csv", path)
        print(f"{name}: {len(table.rows)} rows -> {path}")
        spread = defaultdict(list)
        for row in table.rows:
            spread[row[0]].append(row[1])
        for label in sorted(spread):
            ses = spread[label]
            print(f"  {label}: mean SE {sum(ses) / len(ses):.3f}, "
                  f"spread {max(ses) - min(ses):.3f}")


if __name__ == "__main__":
    main()
