#!/usr/bin/env python3
"""Per-solve wall-clock comparison over mixed general/coplanar scenes."""

import argparse

from quest import bench
from quest.bench import SceneConfig, SyntheticCamera
from quest.cli import write_records_csv, write_time_summary, _summary_path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default="time_benchmark.csv")
    args = ap.parse_args()

    records, stats = bench.run_time_benchmark(
        ["quest6", "quest7", "eightpt"], args.trials, SceneConfig(), SyntheticCamera(), args.seed
    )
    write_records_csv(records, args.output)
    write_time_summary(stats, _summary_path(args.output))
    for method, st in stats.items():
        print(f"{method:8s} mean {st.mean_s*1e3:7.2f} ms   median {st.median_s*1e3:7.2f} ms "
              f"({st.n} solves, {st.n_failed} failed)")


if __name__ == "__main__":
    main()
