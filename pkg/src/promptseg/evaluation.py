"""Evaluation: Dice, prompt sensitivity, strategy benchmarks and ablations.

Report files are deterministic given fixed seeds except for wall-time
columns, which are excluded from the reproducibility guarantee.
"""

from __future__ import annotations

import csv
import json
import time
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .network import Network, NetworkSpec
from .phantom import Phantom, PhantomConfig, generate_phantom_set
from .search import SearchConfig, segment
from .training import (
    CropDataset,
    TrainConfig,
    WeakDataset,
    sample_training_crops,
    train_fsc,
    train_wsc,
)
from .volume import Crop, Mask, Volume

Coord = tuple[int, int, int]

ABLATION_AXES = ("tau", "alpha", "T", "mu", "n", "crop_size", "wsc_samples",
                 "fsc_samples", "strategy")


def dice(pred: Mask, gt: Mask) -> float:
    """2|A∩B| / (|A|+|B|); two empty masks count as perfect agreement."""
    if pred.dims != gt.dims:
        raise ValueError(f"mask dims differ: {pred.dims} vs {gt.dims}")
    a = pred.data.astype(bool)
    b = gt.data.astype(bool)
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


def roi_fraction_scorer(mask):
    """Oracle scorer: fraction of the crop's voxels inside the ground truth.

    ``mask`` may be a single Mask or a dict of volume id -> Mask, letting one
    scorer serve a whole benchmark case set.
    """

    def scorer(volume: Volume, crops: list[Crop]) -> np.ndarray:
        gt = mask[volume.id] if isinstance(mask, dict) else mask
        out = np.empty(len(crops))
        for i, crop in enumerate(crops):
            ow, oh, od = crop.origin
            sw, sh, sd = crop.spec.size
            box = gt.data[ow : ow + sw, oh : oh + sh, od : od + sd]
            out[i] = box.sum() / (sw * sh * sd)
        return out

    return scorer


def prompt_variance(volume: Volume, gt: Mask, config: SearchConfig, wsc, fsc,
                    num_prompts: int, seed: int = 0) -> tuple[float, float]:
    """Mean and sample stdev of Dice across prompts drawn inside the lesion."""
    if num_prompts < 2:
        raise ValueError("num_prompts must be >= 2")
    positives = np.flatnonzero(gt.data.flatten(order="F"))
    if positives.size == 0:
        raise ValueError("ground truth mask is empty; cannot sample prompts")
    rng = np.random.default_rng(seed)
    picks = positives[rng.integers(0, positives.size, size=num_prompts)]
    prompts = np.stack(np.unravel_index(picks, gt.dims, order="F"), axis=1)
    scores = []
    for prompt in prompts:
        mask, _ = segment(volume, [tuple(int(v) for v in prompt)], config, wsc, fsc)
        scores.append(dice(mask, gt))
    scores = np.asarray(scores)
    return float(scores.mean()), float(scores.std(ddof=1))


@dataclass(frozen=True)
class EvalCase:
    """One benchmark unit: a volume, its ground truth, and a prompt."""

    volume: Volume
    gt: Mask
    prompt: Coord


@dataclass(frozen=True)
class StrategyResult:
    strategy: str
    mean_dice: float
    mean_time_s: float
    mean_crops: float
    dices: tuple[float, ...]


def benchmark_strategies(cases: list[EvalCase], config: SearchConfig, scorers,
                         csv_path: str | Path | None = None) -> list[StrategyResult]:
    """Run every strategy over the cases with identical scorers and budget."""
    if not cases:
        raise ValueError("benchmark requires at least one case")
    wsc, fsc = scorers
    results = []
    for strategy in ("spiral", "sliding_window", "random"):
        cfg = replace(config, strategy=strategy)
        dices, times, crops = [], [], []
        for case in cases:
            start = time.monotonic()
            mask, diag = segment(case.volume, [case.prompt], cfg, wsc, fsc)
            times.append(time.monotonic() - start)
            dices.append(dice(mask, case.gt))
            crops.append(diag.crops_evaluated)
        results.append(StrategyResult(
            strategy=strategy,
            mean_dice=float(np.mean(dices)),
            mean_time_s=float(np.mean(times)),
            mean_crops=float(np.mean(crops)),
            dices=tuple(dices),
        ))
    if csv_path is not None:
        with Path(csv_path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["strategy", "mean_dice", "mean_time_s", "mean_crops"])
            for r in results:
                writer.writerow([r.strategy, f"{r.mean_dice:.6f}", f"{r.mean_time_s:.4f}",
                                 f"{r.mean_crops:.1f}"])
    return results


@dataclass(frozen=True)
class AblationGrid:
    axis: str
    values: tuple

    def __post_init__(self) -> None:
        if self.axis not in ABLATION_AXES:
            raise ValueError(f"axis must be one of {ABLATION_AXES}, got {self.axis!r}")
        if not self.values:
            raise ValueError("grid needs at least one value")
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class AblationSetup:
    """Data budgets and training settings shared across grid points."""

    phantom: PhantomConfig = field(default_factory=PhantomConfig)
    eval_cases: int = 10
    wsc_samples: int = 8
    fsc_samples: int = 24
    crops_per_volume: int = 16
    crop_balance: float = 0.5
    wsc_epochs: int = 200
    fsc_epochs: int = 200
    batch_size: int = 4
    learning_rate: float = 1e-3


@dataclass
class AblationRow:
    axis: str
    value: str
    status: str  # "ok" or "failed: <reason>"
    wsc_accuracy: float | None
    fsc_accuracy: float | None
    mean_dice: float | None
    std_dice: float | None


@dataclass
class AblationReport:
    rows: list[AblationRow]
    csv_path: Path
    json_path: Path


def _value_seed(seed: int, axis: str, value, case: int = 0) -> int:
    parts = [seed, zlib.crc32(axis.encode()), zlib.crc32(repr(value).encode()), case]
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def _train_budget(setup: AblationSetup, config: SearchConfig, wsc_samples: int,
                  fsc_samples: int, crop_size: Coord, seed: int):
    """Train both classifiers at the given data budget; returns nets and accuracies."""
    wsc_set = generate_phantom_set(setup.phantom, wsc_samples, 0.5, seed=seed)
    weak = WeakDataset(items=[(p.volume, p.weak_label) for p in wsc_set])
    in_ch = setup.phantom.dims[3]
    wsc_cfg = TrainConfig(epochs=setup.wsc_epochs, batch_size=setup.batch_size,
                          learning_rate=setup.learning_rate, seed=seed)
    wsc = train_wsc(weak, NetworkSpec(in_channels=in_ch), wsc_cfg)
    wsc_acc = _weak_accuracy(wsc, weak)

    fsc_set = generate_phantom_set(setup.phantom, fsc_samples, 0.5, seed=seed + 1)
    items = []
    for i, ph in enumerate(fsc_set):
        ds = sample_training_crops(ph.volume, ph.mask, crop_size, setup.crops_per_volume,
                                   balance=setup.crop_balance, seed=_value_seed(seed, "crops", i))
        items.extend(ds.items)
    crop_ds = CropDataset(items=items)
    fsc_cfg = TrainConfig(epochs=setup.fsc_epochs, batch_size=max(setup.batch_size, 16),
                          learning_rate=setup.learning_rate, seed=seed + 1)
    fsc = train_fsc(crop_ds, NetworkSpec(in_channels=in_ch, head="flatten",
                                         input_size=crop_size), fsc_cfg)
    fsc_acc = _crop_accuracy(fsc, crop_ds)
    return wsc, fsc, wsc_acc, fsc_acc


def _weak_accuracy(net: Network, data: WeakDataset) -> float:
    from .network import forward

    hits = sum(int((forward(net, vol.data) > 0.5) == bool(label)) for vol, label in data.items)
    return hits / len(data.items)


def _crop_accuracy(net: Network, data: CropDataset) -> float:
    from .network import forward_batch

    x, y = data.stacked()
    probs, _, _ = forward_batch(net, x)
    return float(np.mean((probs > 0.5) == (y > 0.5)))


def _apply_axis(config: SearchConfig, axis: str, value) -> SearchConfig:
    if axis == "tau":
        return replace(config, tau=float(value))
    if axis == "alpha":
        return replace(config, alpha=float(value))
    if axis == "T":
        return replace(config, spiral=replace(config.spiral, T=int(value)))
    if axis == "mu":
        return replace(config, spiral=replace(config.spiral, mu=int(value)))
    if axis == "n":
        return replace(config, n_runs=int(value))
    if axis == "strategy":
        return replace(config, strategy=str(value))
    if axis == "crop_size":
        return replace(config, crop_size=tuple(int(v) for v in value))
    return config  # data-budget axes leave the search config unchanged


def run_ablation(grid: AblationGrid, base_config: SearchConfig, setup: AblationSetup,
                 seed: int, out_dir: str | Path, timestamp: str | None = None) -> AblationReport:
    """Sweep one axis; retrain on data-budget (and crop-size) axes, else reuse weights.

    The crop_size axis retrains the FSC because its flatten head pins the
    input size; the WSC is size-agnostic and is reused.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if timestamp is None:
        timestamp = time.strftime("%Y%m%d-%H%M%S")

    eval_set = generate_phantom_set(setup.phantom, setup.eval_cases, 1.0,
                                    seed=_value_seed(seed, "eval", 0))
    cases = [EvalCase(volume=p.volume, gt=p.mask, prompt=_centroid(p.mask))
             for p in eval_set]

    retrain_axes = {"wsc_samples", "fsc_samples", "crop_size"}
    base_nets = None
    if grid.axis not in retrain_axes:
        base_nets = _train_budget(setup, base_config, setup.wsc_samples, setup.fsc_samples,
                                  base_config.crop_size, seed=_value_seed(seed, "base", 0))

    rows: list[AblationRow] = []
    for value in grid.values:
        try:
            wsc_n = int(value) if grid.axis == "wsc_samples" else setup.wsc_samples
            fsc_n = int(value) if grid.axis == "fsc_samples" else setup.fsc_samples
            config = _apply_axis(base_config, grid.axis, value)
            if grid.axis in retrain_axes:
                wsc, fsc, wsc_acc, fsc_acc = _train_budget(
                    setup, config, wsc_n, fsc_n, config.crop_size,
                    seed=_value_seed(seed, grid.axis, value))
            else:
                wsc, fsc, wsc_acc, fsc_acc = base_nets
            dices = []
            for case in cases:
                mask, _ = segment(case.volume, [case.prompt], config, wsc, fsc)
                dices.append(dice(mask, case.gt))
            rows.append(AblationRow(
                axis=grid.axis, value=_fmt_value(value), status="ok",
                wsc_accuracy=round(wsc_acc, 6), fsc_accuracy=round(fsc_acc, 6),
                mean_dice=round(float(np.mean(dices)), 6),
                std_dice=round(float(np.std(dices, ddof=1)) if len(dices) > 1 else 0.0, 6),
            ))
        except Exception as exc:  # keep sweeping; failures are recorded per row
            rows.append(AblationRow(axis=grid.axis, value=_fmt_value(value),
                                    status=f"failed: {exc}", wsc_accuracy=None,
                                    fsc_accuracy=None, mean_dice=None, std_dice=None))

    csv_path = out_dir / f"ablation_{grid.axis}_{timestamp}.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "status", "wsc_accuracy", "fsc_accuracy",
                         "mean_dice", "std_dice"])
        for r in rows:
            writer.writerow([r.axis, r.value, r.status,
                             _blank(r.wsc_accuracy), _blank(r.fsc_accuracy),
                             _blank(r.mean_dice), _blank(r.std_dice)])

    json_path = out_dir / f"ablation_{grid.axis}_{timestamp}.json"
    summary = {
        "axis": grid.axis,
        "values": [_fmt_value(v) for v in grid.values],
        "seed": seed,
        "base_config": asdict(base_config),
        "setup": asdict(setup),
        "rows": [asdict(r) for r in rows],
    }
    json_path.write_text(json.dumps(summary, indent=2) + "\n")
    return AblationReport(rows=rows, csv_path=csv_path, json_path=json_path)


def _centroid(mask: Mask) -> Coord:
    idx = np.argwhere(mask.data > 0)
    if idx.size == 0:
        raise ValueError("cannot take the centroid of an empty mask")
    return tuple(int(round(v)) for v in idx.mean(axis=0))


def _fmt_value(value) -> str:
    if isinstance(value, (tuple, list)):
        return "x".join(str(v) for v in value)
    return str(value)


def _blank(v) -> str:
    return "" if v is None else str(v)
