"""Training for the two classifiers, plus the gradient-check oracle.

The weakly-supervised classifier (WSC) trains on whole volumes with a global
average pool head, so one set of weights scores both full volumes and crops.
The fully-supervised classifier (FSC) trains on fixed-size crops with a
flatten head. Both minimise binary cross-entropy with Adam and are
deterministic given their config seed.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import (
    Network,
    NetworkSpec,
    backward_from_logits,
    forward_batch,
    init_network,
)
from .volume import Crop, CropSpec, Mask, Volume, crop_origin, extract_crop

BCE_EPS = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        # learning_rate == 0 is allowed; it makes training a deterministic no-op.
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must be in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class WeakDataset:
    """Volumes with volume-level labels (lesion somewhere: 1, clean: 0)."""

    items: list[tuple[Volume, int]]

    def __post_init__(self) -> None:
        for _, label in self.items:
            if label not in (0, 1):
                raise ValueError(f"weak labels must be 0 or 1, got {label}")

    def labels(self) -> np.ndarray:
        return np.array([label for _, label in self.items], dtype=np.float64)


@dataclass
class CropDataset:
    """Fixed-size crops with crop-level labels."""

    items: list[tuple[Crop, int]]
    empty_mask_warning: bool = False

    def __post_init__(self) -> None:
        sizes = {crop.spec.size for crop, _ in self.items}
        if len(sizes) > 1:
            raise ValueError(f"all crops must share one size, got {sorted(sizes)}")
        for _, label in self.items:
            if label not in (0, 1):
                raise ValueError(f"crop labels must be 0 or 1, got {label}")

    def crop_size(self) -> tuple[int, int, int]:
        return self.items[0][0].spec.size if self.items else (0, 0, 0)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.stack([crop.data for crop, _ in self.items])
        y = np.array([label for _, label in self.items], dtype=np.float64)
        return x, y


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with probabilities clamped to [1e-12, 1-1e-12]."""
    p = np.clip(np.asarray(probs, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"probs shape {p.shape} != labels shape {y.shape}")
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


class AdamState:
    """Standard Adam with bias correction, kept explicit for determinism."""

    def __init__(self, net: Network, cfg: TrainConfig) -> None:
        self.cfg = cfg
        self.m = {k: np.zeros_like(p) for k, p in net.params.items()}
        self.v = {k: np.zeros_like(p) for k, p in net.params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        cfg = self.cfg
        self.t += 1
        out = {}
        for k, p in params.items():
            g = grads[k]
            self.m[k] = cfg.beta1 * self.m[k] + (1 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1 - cfg.beta2) * g * g
            mhat = self.m[k] / (1 - cfg.beta1**self.t)
            vhat = self.v[k] / (1 - cfg.beta2**self.t)
            out[k] = p - cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.epsilon)
        return out


def _train(inputs: list[np.ndarray], labels: np.ndarray, spec: NetworkSpec, cfg: TrainConfig,
           metrics_csv: str | Path | None) -> Network:
    seq = np.random.SeedSequence(cfg.seed)
    init_seed, shuffle_seed = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
    net = init_network(spec, seed=init_seed)
    adam = AdamState(net, cfg)
    rng = np.random.default_rng(shuffle_seed)
    params = dict(net.params)
    history: list[tuple[int, float, float]] = []

    n = len(inputs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses, hits, seen = [], 0, 0
        start = 0
        while start < n:
            # Batches hold consecutive same-shaped inputs so they can be stacked.
            batch_idx = [order[start]]
            shape = inputs[order[start]].shape
            while (len(batch_idx) < cfg.batch_size and start + len(batch_idx) < n
                   and inputs[order[start + len(batch_idx)]].shape == shape):
                batch_idx.append(order[start + len(batch_idx)])
            start += len(batch_idx)

            x = np.stack([inputs[i] for i in batch_idx])
            y = labels[list(batch_idx)]
            live = Network(spec=spec, params=params)
            probs, _, caches = forward_batch(live, x)
            loss = bce_loss(probs, y)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training aborted: non-finite loss {loss} at epoch {epoch}, "
                    f"step {adam.t + 1} (lr={cfg.learning_rate})"
                )
            dlogits = (probs - y) / len(batch_idx)
            grads = backward_from_logits(live, caches, dlogits)
            params = adam.step(params, grads)

            losses.append(loss * len(batch_idx))
            hits += int(np.sum((probs > 0.5) == (y > 0.5)))
            seen += len(batch_idx)
        history.append((epoch, sum(losses) / seen, hits / seen))

    if metrics_csv is not None:
        path = Path(metrics_csv)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss", "accuracy"])
            for epoch, loss, acc in history:
                writer.writerow([epoch, f"{loss:.8f}", f"{acc:.6f}"])
    return Network(spec=spec, params=params)


def train_wsc(data: WeakDataset, spec: NetworkSpec, cfg: TrainConfig,
              metrics_csv: str | Path | None = None) -> Network:
    """Train the weakly-supervised classifier on whole labelled volumes."""
    if spec.head != "global_average_pool":
        raise ValueError("WSC requires the global_average_pool head")
    if not data.items:
        raise ValueError("weak dataset is empty")
    labels = data.labels()
    if len(set(labels.tolist())) < 2:
        warnings.warn("weak dataset has a single label; training will be degenerate")
    inputs = [vol.data for vol, _ in data.items]
    return _train(inputs, labels, spec, cfg, metrics_csv)


def train_fsc(data: CropDataset, spec: NetworkSpec, cfg: TrainConfig,
              metrics_csv: str | Path | None = None) -> Network:
    """Train the fully-supervised classifier on fixed-size labelled crops."""
    if spec.head != "flatten":
        raise ValueError("FSC requires the flatten head")
    if not data.items:
        raise ValueError("crop dataset is empty")
    if spec.input_size != data.crop_size():
        raise ValueError(
            f"spec input_size {spec.input_size} != dataset crop size {data.crop_size()}"
        )
    labels = np.array([label for _, label in data.items], dtype=np.float64)
    if len(set(labels.tolist())) < 2:
        warnings.warn("crop dataset has a single label; training will be degenerate")
    inputs = [crop.data for crop, _ in data.items]
    return _train(inputs, labels, spec, cfg, metrics_csv)


def derive_crop_labels(mask: Mask, crops: list[CropSpec],
                       min_overlap_fraction: float = 0.0) -> list[int]:
    """Label 1 iff the lesion fraction of the crop strictly exceeds the threshold.

    With the default threshold of 0, any lesion voxel inside the crop makes it
    positive.
    """
    if not 0.0 <= min_overlap_fraction < 1.0:
        raise ValueError("min_overlap_fraction must be in [0, 1)")
    labels = []
    for spec in crops:
        ow, oh, od = crop_origin(mask.dims, spec)
        sw, sh, sd = spec.size
        overlap = int(mask.data[ow : ow + sw, oh : oh + sh, od : od + sd].sum())
        fraction = overlap / (sw * sh * sd)
        labels.append(int(fraction > min_overlap_fraction))
    return labels


def sample_training_crops(volume: Volume, mask: Mask, size: tuple[int, int, int], count: int,
                          balance: float = 0.5, min_overlap_fraction: float = 0.0,
                          seed: int = 0) -> CropDataset:
    """Draw crops centered on lesion voxels and on background voxels.

    round(balance * count) crops are centered on uniformly chosen lesion
    voxels, the rest on uniformly chosen background voxels. Labels follow
    derive_crop_labels. An empty mask with balance > 0 falls back to
    all-background sampling and sets the dataset's warning flag.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0.0 <= balance <= 1.0:
        raise ValueError("balance must be in [0, 1]")
    if mask.dims != volume.spatial_dims:
        raise ValueError(f"mask dims {mask.dims} != volume dims {volume.spatial_dims}")
    rng = np.random.default_rng(seed)
    flat_mask = mask.data.flatten(order="F")
    roi_flat = np.flatnonzero(flat_mask)
    bg_flat = np.flatnonzero(flat_mask == 0)

    n_roi = round(balance * count)
    warning = False
    if roi_flat.size == 0 and n_roi > 0:
        warning = True
        n_roi = 0
    n_bg = count - n_roi
    if bg_flat.size == 0 and n_bg > 0:
        raise ValueError("mask has no background voxels to sample from")

    picks = []
    if n_roi:
        picks.append(roi_flat[rng.integers(0, roi_flat.size, size=n_roi)])
    if n_bg:
        picks.append(bg_flat[rng.integers(0, bg_flat.size, size=n_bg)])
    flat_centers = np.concatenate(picks) if picks else np.array([], dtype=int)
    centers = np.stack(np.unravel_index(flat_centers, mask.dims, order="F"), axis=1)

    specs = [CropSpec(size=size, center=tuple(int(v) for v in c)) for c in centers]
    labels = derive_crop_labels(mask, specs, min_overlap_fraction)
    items = [(extract_crop(volume, spec), label) for spec, label in zip(specs, labels)]
    return CropDataset(items=items, empty_mask_warning=warning)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    tolerance: float
    per_param: dict[str, float]

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def gradient_check(net: Network, x: np.ndarray, label: float, step: float = 1e-6,
                   tolerance: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Uses the single-sample BCE loss. Relative error per parameter entry is
    |a - n| / max(|a|, |n|, 1e-3); the floor makes near-zero pairs compare at
    an absolute scale where central differences are still trustworthy.
    """
    x = np.asarray(x, dtype=np.float64)
    y = float(label)

    def loss_for(params: dict[str, np.ndarray]) -> float:
        probs, _, _ = forward_batch(Network(spec=net.spec, params=params), x[None])
        return bce_loss(probs, np.array([y]))

    probs, _, caches = forward_batch(net, x[None])
    grads = backward_from_logits(net, caches, probs - np.array([y]))

    per_param: dict[str, float] = {}
    worst_param, worst = "", 0.0
    params = {k: p.copy() for k, p in net.params.items()}
    for name, p in params.items():
        analytic = grads[name]
        layer_worst = 0.0
        flat = p.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = loss_for(params)
            flat[i] = orig - step
            lo = loss_for(params)
            flat[i] = orig
            numeric = (hi - lo) / (2 * step)
            a = analytic.reshape(-1)[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-3)
            layer_worst = max(layer_worst, rel)
        per_param[name] = layer_worst
        if layer_worst >= worst:
            worst, worst_param = layer_worst, name
    return GradCheckReport(max_rel_error=worst, worst_param=worst_param,
                           tolerance=tolerance, per_param=per_param)
