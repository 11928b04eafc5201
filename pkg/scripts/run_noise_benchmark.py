#!/usr/bin/env python3
"""Error-vs-pixel-noise sweep over all methods, written as CSV.

Full-resolution variant of `quest bench noise`: 0..10 px in 0.5 px steps,
100 trials per level, general or coplanar scenes. Expect a few minutes.
"""

import argparse

from quest import bench
from quest.bench import SceneConfig, SyntheticCamera
from quest.cli import write_noise_summary, write_records_csv, _summary_path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--geometry", choices=["general", "coplanar"], default="general")
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--sigma-max", type=float, default=10.0)
    ap.add_argument("--sigma-step", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default="noise_benchmark.csv")
    args = ap.parse_args()

    sigmas = []
    s = 0.0
    while s <= args.sigma_max + 1e-9:
        sigmas.append(round(s, 3))
        s += args.sigma_step
    cfg = SceneConfig(geometry=args.geometry)
    records = bench.run_noise_benchmark(
        ["quest6", "quest7", "eightpt"], sigmas, args.trials, cfg, SyntheticCamera(), args.seed
    )
    write_records_csv(records, args.output)
    write_noise_summary(records, _summary_path(args.output))
    print(f"wrote {args.output} and {_summary_path(args.output)}")


if __name__ == "__main__":
    main()
