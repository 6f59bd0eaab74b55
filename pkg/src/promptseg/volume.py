"""Core volume and crop types.

Conventions used across the package:

* volumes are rank-4 arrays indexed ``(w, h, d, c)``, float64 in memory,
* masks are rank-3 arrays indexed ``(w, h, d)``, uint8 with values in {0, 1},
* crops are anchored by their center voxel and clamped so that the extracted
  box always lies fully inside the volume (no padding).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Coord = tuple[int, int, int]


@dataclass(frozen=True)
class Volume:
    """A multi-channel 3D image with voxel spacing in millimetres."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    id: str = "unnamed"

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 4:
            raise ValueError(f"volume data must be rank 4 (w,h,d,c), got rank {arr.ndim}")
        if min(arr.shape) < 1:
            raise ValueError(f"volume dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("volume intensities must be finite")
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ValueError(f"spacing must be three positive floats, got {self.spacing}")
        arr = arr.copy() if arr is self.data else arr
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def spatial_dims(self) -> Coord:
        return self.data.shape[:3]


@dataclass(frozen=True)
class Mask:
    """A binary voxel mask aligned to a volume's spatial grid."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ValueError(f"mask data must be rank 3 (w,h,d), got rank {arr.ndim}")
        if min(arr.shape) < 1:
            raise ValueError(f"mask dims must be positive, got {arr.shape}")
        vals = np.unique(arr)
        if not np.all(np.isin(vals, (0, 1))):
            raise ValueError("mask values must be 0 or 1")
        arr = arr.astype(np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> Coord:
        return self.data.shape

    def voxel_count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class CropSpec:
    """A crop request: box size and the voxel the box is anchored on."""

    size: Coord
    center: Coord

    def __post_init__(self) -> None:
        if len(self.size) != 3 or any(int(s) < 1 for s in self.size):
            raise ValueError(f"crop size must be three positive ints, got {self.size}")
        if len(self.center) != 3:
            raise ValueError(f"crop center must be three ints, got {self.center}")
        object.__setattr__(self, "size", tuple(int(s) for s in self.size))
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))


@dataclass(frozen=True)
class Crop:
    """An extracted sub-volume plus where it came from."""

    data: np.ndarray
    origin: Coord
    spec: CropSpec


def crop_origin(spatial_dims: Coord, spec: CropSpec) -> Coord:
    """Low corner of the crop box after clamping into the volume.

    The ideal low corner is ``center - floor(size/2)`` per axis; it is then
    clamped into ``[0, dim - size]`` so the box never leaves the volume.
    Raises ValueError when the crop is larger than the volume on any axis.
    """
    origin = []
    for axis, (dim, size, center) in enumerate(zip(spatial_dims, spec.size, spec.center)):
        if size > dim:
            raise ValueError(
                f"crop size {spec.size} exceeds volume dims {tuple(spatial_dims)} on axis {axis}"
            )
        ideal = center - size // 2
        origin.append(int(min(max(ideal, 0), dim - size)))
    return tuple(origin)


def crop_center_bounds(spatial_dims: Coord, size: Coord) -> tuple[Coord, Coord]:
    """Inclusive (low, high) range of centers whose ideal box needs no clamping."""
    lo, hi = [], []
    for axis, (dim, s) in enumerate(zip(spatial_dims, size)):
        if s > dim:
            raise ValueError(f"crop size {tuple(size)} exceeds dims {tuple(spatial_dims)} on axis {axis}")
        lo.append(s // 2)
        hi.append(dim - s + s // 2)
    return tuple(lo), tuple(hi)


def extract_crop(volume: Volume, spec: CropSpec) -> Crop:
    """Extract a center-anchored crop, clamped to stay inside the volume."""
    origin = crop_origin(volume.spatial_dims, spec)
    ow, oh, od = origin
    sw, sh, sd = spec.size
    data = np.ascontiguousarray(volume.data[ow : ow + sw, oh : oh + sh, od : od + sd, :])
    return Crop(data=data, origin=origin, spec=spec)
