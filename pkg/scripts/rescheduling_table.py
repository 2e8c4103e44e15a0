"""Deterministic re-scheduling against random restarts on the warehouse map.

    python scripts/rescheduling_table.py --seed 0 --instances 25 --out-dir results/resched
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from prioplan.experiment import ExperimentConfig, aggregate, parse_ssi, run_experiment, write_csvs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--map", default="warehouse")
    ap.add_argument("--agents", default="16,32,64,96,128,160")
    ap.add_argument("--ssi", default="5")
    ap.add_argument("--instances", type=int, default=25)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--time-cap", type=float, default=60.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out-dir", default="results/resched")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = ExperimentConfig(map=args.map, agents=tuple(int(a) for a in args.agents.split(",")),
                           instances=args.instances, seed=args.seed, methods=("det", "rand"),
                           ssi=(parse_ssi(args.ssi),), repeats=args.repeats,
                           time_cap=args.time_cap)
    records = run_experiment(cfg, jobs=args.jobs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csvs(records, out / "runs.csv", out / "aggregate.csv")

    rows = {(int(r[1]), r[3]): r for r in aggregate(records)}
    print("agents\tmethod\tSR\truntime_s\tmakespan\tflowtime")
    for n in cfg.agents:
        for m in cfg.methods:
            r = rows[n, m]
            print(f"{n}\t{m}\t{float(r[5]):.2f}\t{r[6] or '-'}\t{r[7] or '-'}\t{r[8] or '-'}")


if __name__ == "__main__":
    sys.exit(main())
