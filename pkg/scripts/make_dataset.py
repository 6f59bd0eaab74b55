"""Generate the phantom datasets used by the training and benchmark scripts.

Writes three sibling directories under --out: wsc_train (weakly labeled,
half lesioned), fsc_train (all lesioned, crop source), held_out (all
lesioned, evaluation only). Seeds default to the values the acceptance
suite uses, so artifacts are comparable across machines.
"""

import argparse
import csv
from dataclasses import replace
from pathlib import Path

from promptseg import PhantomConfig, generate_phantom_set, save_mask, save_volume


def write_split(out_dir: Path, config: PhantomConfig, count: int,
                lesion_fraction: float, seed: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    phantoms = generate_phantom_set(config, count, lesion_fraction, seed=seed)
    with (out_dir / "labels.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "weak_label"])
        for i, ph in enumerate(phantoms):
            vol_id = f"vol_{i:03d}"
            save_volume(replace(ph.volume, id=vol_id), out_dir / f"{vol_id}.json")
            save_mask(ph.mask, out_dir / f"{vol_id}_gt.json")
            writer.writerow([vol_id, ph.weak_label])
    print(f"{out_dir}: {count} phantoms (lesion fraction {lesion_fraction})")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--wsc-count", type=int, default=8)
    parser.add_argument("--fsc-count", type=int, default=24)
    parser.add_argument("--held-out-count", type=int, default=20)
    parser.add_argument("--wsc-seed", type=int, default=11)
    parser.add_argument("--fsc-seed", type=int, default=21)
    parser.add_argument("--held-out-seed", type=int, default=99)
    args = parser.parse_args()

    config = PhantomConfig()
    write_split(args.out / "wsc_train", config, args.wsc_count, 0.5, args.wsc_seed)
    write_split(args.out / "fsc_train", config, args.fsc_count, 1.0, args.fsc_seed)
    write_split(args.out / "held_out", config, args.held_out_count, 1.0,
                args.held_out_seed)


if __name__ == "__main__":
    main()
