#!/usr/bin/env python3
"""Per-UE SE CDFs comparing the scalable detectors and weighting vectors with
their unscaled counterparts, for the distributed and centralized schemes.

    python scripts/run_detector_cdfs.py --config configs/desk_scale.json --out results/
"""

import argparse
import pathlib

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
    for name in ("cdf-detectors-distributed", "cdf-detectors-centralized"):
        table = run_experiment(name, cfg)
        path = out / f"{name}.csv"
        emit_results(table, "csv", path)
        print(f"{name}: {len(table.rows)} rows -> {path}")


if __name__ == "__main__":
    main()
