"""Prompt-driven crop search: trajectories, joint scoring, and voting.

A search run plans a trajectory of crop centers around the prompt, scores
every crop with both classifiers, thresholds the joint score, and unions the
extents of positive crops into a per-run region. Several runs with rotated
and slightly rescaled spirals are combined by strict-majority vote, and
multi-prompt results are unioned.

Spiral geometry for step t: radius t/s, angle 2*pi*t/mu (plus a per-run
offset); the depth component is always zero, so each spiral stays in the
prompt's plane and depth coverage comes from the crop's depth extent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from math import cos, pi, sin

import numpy as np

from .network import Network, forward_batch
from .volume import Crop, CropSpec, Mask, Volume, crop_center_bounds, extract_crop

Coord = tuple[int, int, int]

STRATEGIES = ("spiral", "sliding_window", "random")


@dataclass(frozen=True)
class SpiralParams:
    """s: radius growth divisor, mu: steps per full turn, T: total steps."""

    s: float = 4.0
    mu: int = 200
    T: int = 80
    angle_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.mu < 1:
            raise ValueError("mu must be >= 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    @property
    def max_radius(self) -> float:
        return self.T / self.s


def default_spiral(T: int = 80, mu: int = 200, max_radius: float = 20.0) -> SpiralParams:
    """Spiral whose final step lands at ``max_radius`` voxels from the prompt."""
    return SpiralParams(s=T / max_radius, mu=mu, T=T)


@dataclass(frozen=True)
class SearchConfig:
    crop_size: Coord = (10, 10, 6)
    alpha: float = 0.25
    tau: float = 0.05
    spiral: SpiralParams = field(default_factory=default_spiral)
    n_runs: int = 6
    strategy: str = "spiral"
    vote_rule: str = "strict_majority"
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.crop_size) != 3 or any(int(s) < 1 for s in self.crop_size):
            raise ValueError(f"crop_size must be three positive ints, got {self.crop_size}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.vote_rule != "strict_majority":
            raise ValueError(f"only strict_majority voting is supported, got {self.vote_rule!r}")
        object.__setattr__(self, "crop_size", tuple(int(s) for s in self.crop_size))


@dataclass(frozen=True)
class RunResult:
    run_index: int
    trajectory: np.ndarray  # (steps, 3) int crop centers
    scores: np.ndarray      # (steps,) joint scores
    decisions: np.ndarray   # (steps,) 0/1
    positive_region: Mask


@dataclass(frozen=True)
class VoteMap:
    counts: np.ndarray  # per-voxel number of runs whose region contains the voxel
    n_runs: int


def spiral_offset(params: SpiralParams, t: int) -> tuple[float, float, float]:
    """Continuous offset from the prompt at step t (depth component is zero)."""
    r = t / params.s
    beta = 2.0 * pi * (t / params.mu) + params.angle_offset
    return (r * cos(beta), r * sin(beta), 0.0)


def plan_trajectory(strategy: str, prompt: Coord, config: SearchConfig,
                    spatial_dims: Coord, seed: int = 0) -> np.ndarray:
    """Integer crop centers for one run, clamped to the valid center range."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    lo, hi = crop_center_bounds(spatial_dims, config.crop_size)
    prompt = np.asarray(prompt, dtype=np.int64)

    if strategy == "spiral":
        centers = []
        for t in range(config.spiral.T + 1):
            off = spiral_offset(config.spiral, t)
            c = np.rint(prompt + np.asarray(off)).astype(np.int64)
            centers.append(np.clip(c, lo, hi))
        return np.array(centers, dtype=np.int64)

    radius = config.spiral.max_radius
    in_lo = [int(np.floor(prompt[a] - radius)) for a in range(2)]
    in_hi = [int(np.ceil(prompt[a] + radius)) for a in range(2)]

    if strategy == "sliding_window":
        stride = [max(1, s // 2) for s in config.crop_size]
        axes = []
        for a in range(2):  # in-plane axes cover the spiral-reachable square
            vals = np.arange(in_lo[a], in_hi[a] + 1, stride[a])
            vals = np.clip(vals, lo[a], hi[a])
            axes.append(np.unique(vals))
        axes.append(np.unique(np.arange(lo[2], hi[2] + 1, stride[2])))  # every reachable depth
        centers = [(w, h, d) for w in axes[0] for h in axes[1] for d in axes[2]]
        return np.array(centers, dtype=np.int64)

    # random: uniform centers from the same region, clamped to valid range
    rng = np.random.default_rng(seed)
    lows = [max(in_lo[0], lo[0]), max(in_lo[1], lo[1]), lo[2]]
    highs = [min(in_hi[0], hi[0]), min(in_hi[1], hi[1]), hi[2]]
    cols = [rng.integers(l, h + 1, size=config.spiral.T + 1) for l, h in zip(lows, highs)]
    return np.stack(cols, axis=1).astype(np.int64)


Scorer = "Network | Callable[[Volume, list[Crop]], np.ndarray]"


def score_crops(scorer, volume: Volume, crops: list[Crop]) -> np.ndarray:
    """Evaluate a classifier (or any callable scorer) on a batch of crops."""
    if isinstance(scorer, Network):
        x = np.stack([crop.data for crop in crops])
        probs, _, _ = forward_batch(scorer, x)
        return probs
    return np.asarray(scorer(volume, crops), dtype=np.float64)


def joint_score(crop: Crop, wsc, fsc, alpha: float, volume: Volume | None = None) -> float:
    """alpha * wsc(crop) + (1 - alpha) * fsc(crop)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    f = float(score_crops(wsc, volume, [crop])[0])
    g = float(score_crops(fsc, volume, [crop])[0])
    return alpha * f + (1.0 - alpha) * g


def threshold_score(score: float, tau: float) -> int:
    """Strict decision: positive only when score > tau."""
    return int(score > tau)


def _check_prompt(prompt: Coord, spatial_dims: Coord, index: int | None = None) -> None:
    label = f"prompt {index}" if index is not None else "prompt"
    if len(prompt) != 3:
        raise ValueError(f"{label} must be three ints, got {prompt}")
    for axis, (p, dim) in enumerate(zip(prompt, spatial_dims)):
        if not 0 <= int(p) < dim:
            raise ValueError(
                f"{label} {tuple(prompt)} outside volume dims {tuple(spatial_dims)} on axis {axis}"
            )


def run_search(volume: Volume, prompt: Coord, config: SearchConfig, wsc, fsc,
               run_seed: int = 0, run_index: int = 0) -> RunResult:
    """Score one trajectory and union the extents of positive crops."""
    _check_prompt(prompt, volume.spatial_dims)
    centers = plan_trajectory(config.strategy, prompt, config, volume.spatial_dims, seed=run_seed)
    crops = [extract_crop(volume, CropSpec(size=config.crop_size, center=tuple(int(v) for v in c)))
             for c in centers]
    f = score_crops(wsc, volume, crops)
    g = score_crops(fsc, volume, crops)
    scores = config.alpha * f + (1.0 - config.alpha) * g
    decisions = (scores > config.tau).astype(np.int64)

    region = np.zeros(volume.spatial_dims, dtype=np.uint8)
    for crop, positive in zip(crops, decisions):
        if positive:
            ow, oh, od = crop.origin
            sw, sh, sd = crop.spec.size
            region[ow : ow + sw, oh : oh + sh, od : od + sd] = 1
    return RunResult(run_index=run_index, trajectory=centers, scores=scores,
                     decisions=decisions, positive_region=Mask(region))


def compute_vote_map(runs: list[RunResult]) -> VoteMap:
    if not runs:
        raise ValueError("vote requires at least one run")
    dims = runs[0].positive_region.dims
    counts = np.zeros(dims, dtype=np.int32)
    for run in runs:
        if run.positive_region.dims != dims:
            raise ValueError("all runs must share volume dims")
        counts += run.positive_region.data
    return VoteMap(counts=counts, n_runs=len(runs))


def majority_vote(runs: list[RunResult]) -> Mask:
    """Keep voxels contained in at least floor(n/2)+1 run regions."""
    votes = compute_vote_map(runs)
    needed = votes.n_runs // 2 + 1
    return Mask((votes.counts >= needed).astype(np.uint8))


def _run_variant(config: SearchConfig, k: int) -> SearchConfig:
    """Per-run spiral variation: rotated start angle and a +/-5% scale jitter."""
    n = config.n_runs
    if config.strategy != "spiral" or n == 1:
        return config
    angle = 2.0 * pi * k / n
    scale = 1.0 + 0.1 * (k / (n - 1) - 0.5)
    spiral = replace(config.spiral, s=config.spiral.s * scale,
                     angle_offset=config.spiral.angle_offset + angle)
    return replace(config, spiral=spiral)


def _run_seed(config: SearchConfig, prompt: Coord, k: int) -> int:
    seq = np.random.SeedSequence([config.seed, *(int(p) for p in prompt), k])
    return int(seq.generate_state(1)[0])


@dataclass
class SegmentDiagnostics:
    crops_evaluated: int
    runtime_s: float
    positives_per_run: list[list[int]]  # [prompt][run] positive crop counts


def segment(volume: Volume, prompts: list[Coord], config: SearchConfig, wsc, fsc,
            ) -> tuple[Mask, SegmentDiagnostics]:
    """Segment from one or more prompts: per-prompt majority vote, then union."""
    if not prompts:
        raise ValueError("segment requires at least one prompt")
    for i, prompt in enumerate(prompts):
        _check_prompt(prompt, volume.spatial_dims, index=i)

    started = time.perf_counter()
    union = np.zeros(volume.spatial_dims, dtype=np.uint8)
    crops_evaluated = 0
    positives: list[list[int]] = []
    for prompt in prompts:
        runs = []
        for k in range(config.n_runs):
            variant = _run_variant(config, k)
            result = run_search(volume, prompt, variant, wsc, fsc,
                                run_seed=_run_seed(config, prompt, k), run_index=k)
            crops_evaluated += len(result.trajectory)
            runs.append(result)
        positives.append([int(r.decisions.sum()) for r in runs])
        union = np.maximum(union, majority_vote(runs).data)
    elapsed = time.perf_counter() - started
    return Mask(union), SegmentDiagnostics(
        crops_evaluated=crops_evaluated,
        runtime_s=elapsed,
        positives_per_run=positives,
    )
