"""Success rate against robot count for several safe-start windows.

    python scripts/ssi_sweep.py --seed 0 --instances 25 --out-dir results/ssi
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from prioplan.experiment import (ExperimentConfig, aggregate, format_ssi, parse_ssi,
                                 run_experiment, write_csvs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--map", default="empty:32x32")
    ap.add_argument("--agents", default="32,64,96,128,160,192")
    ap.add_argument("--ssi", default="0,1,3,5,inf")
    ap.add_argument("--instances", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out-dir", default="results/ssi")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = ExperimentConfig(map=args.map, agents=tuple(int(a) for a in args.agents.split(",")),
                           instances=args.instances, seed=args.seed, methods=("none",),
                           ssi=tuple(parse_ssi(k) for k in args.ssi.split(",")))
    records = run_experiment(cfg, jobs=args.jobs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csvs(records, out / "runs.csv", out / "aggregate.csv")

    rate = {(int(r[1]), r[2]): float(r[5]) for r in aggregate(records)}
    keys = [format_ssi(k) for k in cfg.ssi]
    w = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    w.writerow(["agents"] + [f"k={k}" for k in keys])
    for n in cfg.agents:
        w.writerow([n] + [f"{rate[n, k]:.2f}" for k in keys])


if __name__ == "__main__":
    main()
