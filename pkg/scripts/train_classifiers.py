"""Train both classifiers on a workspace produced by make_dataset.py.

Reproduces the minimal-data recipe: the weak classifier sees whole volumes
with volume-level labels, the crop classifier sees balanced ROI/background
crops. Weights and per-epoch metrics land next to the data.
"""

import argparse
import csv
import time
from pathlib import Path

from promptseg import (
    CropDataset,
    NetworkSpec,
    SearchConfig,
    TrainConfig,
    WeakDataset,
    load_mask,
    load_volume,
    sample_training_crops,
    save_weights,
    train_fsc,
    train_wsc,
)


def read_split(split_dir: Path):
    entries = []
    with (split_dir / "labels.csv").open() as fh:
        for row in csv.DictReader(fh):
            volume = load_volume(split_dir / f"{row['id']}.json")
            gt = load_mask(split_dir / f"{row['id']}_gt.json")
            entries.append((volume, gt, int(row["weak_label"])))
    return entries


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workspace", type=Path, required=True)
    parser.add_argument("--wsc-epochs", type=int, default=60)
    parser.add_argument("--fsc-epochs", type=int, default=120)
    parser.add_argument("--crops-per-volume", type=int, default=16)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    crop = SearchConfig().crop_size
    start = time.monotonic()

    weak_entries = read_split(args.workspace / "wsc_train")
    in_channels = weak_entries[0][0].dims[3]
    weak = WeakDataset(items=[(v, y) for v, _, y in weak_entries])
    wsc = train_wsc(weak, NetworkSpec(in_channels=in_channels),
                    TrainConfig(epochs=args.wsc_epochs, batch_size=4, seed=args.seed),
                    metrics_csv=args.workspace / "wsc_metrics.csv")
    save_weights(wsc, args.workspace / "wsc_weights.json")
    print(f"wsc done in {time.monotonic() - start:.0f}s")

    items = []
    for i, (volume, gt, _) in enumerate(read_split(args.workspace / "fsc_train")):
        ds = sample_training_crops(volume, gt, crop, args.crops_per_volume,
                                   balance=0.5, seed=args.seed + 10 + i)
        items.extend(ds.items)
    fsc = train_fsc(CropDataset(items=items),
                    NetworkSpec(in_channels=in_channels, head="flatten", input_size=crop),
                    TrainConfig(epochs=args.fsc_epochs, batch_size=16, seed=args.seed + 10),
                    metrics_csv=args.workspace / "fsc_metrics.csv")
    save_weights(fsc, args.workspace / "fsc_weights.json")
    print(f"both classifiers done in {time.monotonic() - start:.0f}s; "
          f"weights in {args.workspace}")


if __name__ == "__main__":
    main()
