"""Benchmark the three search strategies on a held-out split.

Prompts sit at each lesion centroid. With --oracle the classifiers are
replaced by the ROI-fraction oracle, isolating search behavior from
classifier quality; otherwise trained weights from the workspace are used.
"""

import argparse
from pathlib import Path

import numpy as np

from promptseg import (
    EvalCase,
    SearchConfig,
    benchmark_strategies,
    load_weights,
    roi_fraction_scorer,
)

from train_classifiers import read_split


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workspace", type=Path, required=True)
    parser.add_argument("--split", default="held_out")
    parser.add_argument("--out", type=Path, default=None, help="CSV path")
    parser.add_argument("--oracle", action="store_true")
    args = parser.parse_args()

    cases, gt_by_id = [], {}
    for volume, gt, _ in read_split(args.workspace / args.split):
        if gt.voxel_count() == 0:
            continue
        prompt = tuple(int(round(v)) for v in np.argwhere(gt.data > 0).mean(axis=0))
        cases.append(EvalCase(volume=volume, gt=gt, prompt=prompt))
        gt_by_id[volume.id] = gt

    if args.oracle:
        scorer = roi_fraction_scorer(gt_by_id)
        scorers = (scorer, scorer)
    else:
        scorers = (load_weights(args.workspace / "wsc_weights.json",
                                expect_head="global_average_pool"),
                   load_weights(args.workspace / "fsc_weights.json",
                                expect_head="flatten"))

    out = args.out or args.workspace / "benchmark.csv"
    for r in benchmark_strategies(cases, SearchConfig(), scorers, csv_path=out):
        print(f"{r.strategy:15s} dice {r.mean_dice:.4f}  "
              f"time {r.mean_time_s:.2f}s  crops {r.mean_crops:.0f}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
