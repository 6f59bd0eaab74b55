"""Synthetic phantom volumes with known lesion geometry.

A phantom is a soft-sphere "gland" intensity profile plus Gaussian noise.
When a lesion is present, an ellipsoid with elevated intensity is placed
inside the gland and the exact ellipsoid voxel set is returned as ground
truth. Channel 1 (when present) carries the lesion again with independent
contrast and a dimmer background, standing in for a second modality.

Generation is a pure function of (config, seed): the same pair yields
bit-identical volumes, masks and labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .volume import Mask, Volume

AxisRange = tuple[int, int]


@dataclass(frozen=True)
class PhantomConfig:
    dims: tuple[int, int, int, int] = (64, 64, 24, 2)
    lesion_present: bool = True
    lesion_center_range: tuple[AxisRange, AxisRange, AxisRange] = ((24, 40), (24, 40), (10, 14))
    lesion_radii_range: tuple[AxisRange, AxisRange, AxisRange] = ((6, 9), (6, 9), (2, 3))
    lesion_contrast: float = 2.0
    gland_radius: float = 22.0
    noise_sigma: float = 0.1
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if len(self.dims) != 4 or any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be four positive ints, got {self.dims}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.gland_radius <= 0:
            raise ValueError("gland_radius must be positive")
        for name, ranges in (("center", self.lesion_center_range), ("radii", self.lesion_radii_range)):
            for lo, hi in ranges:
                if lo > hi:
                    raise ValueError(f"lesion {name} range ({lo}, {hi}) has lo > hi")
        for (lo, _), dim in zip(self.lesion_radii_range, self.dims):
            if lo < 1:
                raise ValueError("lesion radii must be >= 1")
        if self.lesion_present:
            self._check_lesion_fits()

    def _check_lesion_fits(self) -> None:
        # Conservative containment: worst-case center offset plus the largest
        # radius must stay inside the gland sphere.
        gland_center = np.array([d / 2.0 for d in self.dims[:3]])
        max_radius = max(hi for _, hi in self.lesion_radii_range)
        worst = 0.0
        for corner in np.ndindex(2, 2, 2):
            point = np.array([self.lesion_center_range[a][corner[a]] for a in range(3)], dtype=float)
            worst = max(worst, float(np.linalg.norm(point - gland_center)))
        if worst + max_radius > self.gland_radius:
            raise ValueError(
                f"lesion may leave the gland: worst center offset {worst:.2f} + "
                f"max radius {max_radius} > gland radius {self.gland_radius}"
            )


def ellipsoid_mask(spatial_dims: tuple[int, int, int], center: tuple[float, float, float],
                   radii: tuple[float, float, float]) -> np.ndarray:
    """Boolean voxel set of ((x-c)/r)^2 summed over axes <= 1."""
    w, h, d = spatial_dims
    xs = (np.arange(w)[:, None, None] - center[0]) / radii[0]
    ys = (np.arange(h)[None, :, None] - center[1]) / radii[1]
    zs = (np.arange(d)[None, None, :] - center[2]) / radii[2]
    return xs**2 + ys**2 + zs**2 <= 1.0


@dataclass(frozen=True)
class Phantom:
    volume: Volume
    mask: Mask
    weak_label: int
    lesion_center: tuple[int, int, int] | None
    lesion_radii: tuple[int, int, int] | None


def generate_phantom(config: PhantomConfig, seed: int) -> Phantom:
    """Generate one phantom volume, its ground-truth mask and weak label."""
    rng = np.random.default_rng(seed)
    w, h, d, c = config.dims

    center = radii = None
    lesion = np.zeros((w, h, d), dtype=bool)
    if config.lesion_present:
        center = tuple(int(rng.integers(lo, hi + 1)) for lo, hi in config.lesion_center_range)
        radii = tuple(int(rng.integers(lo, hi + 1)) for lo, hi in config.lesion_radii_range)
        lesion = ellipsoid_mask((w, h, d), center, radii)

    gland_center = (w / 2.0, h / 2.0, d / 2.0)
    xs = (np.arange(w)[:, None, None] - gland_center[0]) ** 2
    ys = (np.arange(h)[None, :, None] - gland_center[1]) ** 2
    zs = (np.arange(d)[None, None, :] - gland_center[2]) ** 2
    dist2 = xs + ys + zs
    gland = np.clip(1.0 - dist2 / config.gland_radius**2, 0.0, 1.0)

    data = np.empty((w, h, d, c), dtype=np.float64)
    data[..., 0] = gland + config.lesion_contrast * lesion
    if config.noise_sigma > 0:
        data[..., 0] += config.noise_sigma * rng.standard_normal((w, h, d))
    for ch in range(1, c):
        # Secondary channels: dim background, lesion at independent contrast.
        data[..., ch] = 0.4 * gland + 1.25 * config.lesion_contrast * lesion
        if config.noise_sigma > 0:
            data[..., ch] += config.noise_sigma * rng.standard_normal((w, h, d))

    volume = Volume(data=data, spacing=config.spacing, id=f"phantom-{seed:05d}")
    return Phantom(
        volume=volume,
        mask=Mask(lesion.astype(np.uint8)),
        weak_label=int(config.lesion_present),
        lesion_center=center,
        lesion_radii=radii,
    )


def generate_phantom_set(config: PhantomConfig, count: int, lesion_fraction: float,
                         seed: int) -> list[Phantom]:
    """Generate ``count`` phantoms; the first round(fraction*count) carry lesions.

    Each phantom gets its own derived seed so sets are reproducible and
    individual members can be regenerated independently.
    """
    if not 0.0 <= lesion_fraction <= 1.0:
        raise ValueError("lesion_fraction must be in [0, 1]")
    n_lesion = round(lesion_fraction * count)
    phantoms = []
    for i in range(count):
        cfg = PhantomConfig(**{**_config_dict(config), "lesion_present": i < n_lesion})
        child_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        phantoms.append(generate_phantom(cfg, child_seed))
    return phantoms


def _config_dict(config: PhantomConfig) -> dict:
    from dataclasses import asdict

    return asdict(config)
