"""Sweep search and data-budget axes, one report pair (CSV + JSON) per axis.

Default grids mirror the ranges that matter in practice: tau around its
working point, alpha across the blend, n over vote sizes, and the two
data-budget axes. Each axis is independent; rows that fail keep the sweep
going and are marked in the report.
"""

import argparse
from pathlib import Path

from promptseg import AblationGrid, AblationSetup, SearchConfig, run_ablation

DEFAULT_GRIDS = {
    "tau": (0.01, 0.02, 0.05, 0.10, 0.20),
    "alpha": (0.0, 0.25, 0.5, 0.75, 1.0),
    "n": (1, 2, 4, 6, 8),
    "T": (20, 40, 80, 160),
    "wsc_samples": (2, 4, 8),
    "fsc_samples": (6, 12, 24),
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, required=True)
    parser.add_argument("--axes", nargs="+", default=["tau"],
                        choices=sorted(DEFAULT_GRIDS))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--eval-cases", type=int, default=10)
    parser.add_argument("--wsc-epochs", type=int, default=60)
    parser.add_argument("--fsc-epochs", type=int, default=120)
    args = parser.parse_args()

    setup = AblationSetup(eval_cases=args.eval_cases, wsc_epochs=args.wsc_epochs,
                          fsc_epochs=args.fsc_epochs)
    for axis in args.axes:
        grid = AblationGrid(axis=axis, values=DEFAULT_GRIDS[axis])
        report = run_ablation(grid, SearchConfig(), setup, seed=args.seed,
                              out_dir=args.out_dir)
        for row in report.rows:
            dice_str = "-" if row.mean_dice is None else f"{row.mean_dice:.4f}"
            print(f"{axis}={row.value:10s} {row.status:10s} dice {dice_str}")
        print(f"wrote {report.csv_path}")


if __name__ == "__main__":
    main()
