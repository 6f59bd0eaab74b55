"""On-disk formats: run-length masks and raw-binary volumes.

Flattening convention everywhere: w varies fastest, then h, then d, then c
(column-major over our (w,h,d,c) index order). Volumes are stored as a JSON
header next to a raw little-endian float32 blob; masks use the same header
shape with a uint8 blob. RLE strings are comma-joined ``value:count`` pairs
over the w-fastest flattening, e.g. ``"0:3,1:2"``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .volume import Mask, Volume

VOLUME_DTYPE = "f32le"
MASK_DTYPE = "u8"


def rle_encode(mask: Mask) -> str:
    """Encode a mask as ``value:count`` pairs over the w-fastest flattening."""
    flat = mask.data.flatten(order="F")
    # Boundaries between runs: positions where the value changes.
    changes = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], changes))
    ends = np.concatenate((changes, [flat.size]))
    return ",".join(f"{int(flat[s])}:{int(e - s)}" for s, e in zip(starts, ends))


def rle_decode(rle: str, dims: tuple[int, int, int]) -> Mask:
    """Decode ``rle_encode`` output; counts must sum to exactly prod(dims)."""
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive ints, got {dims}")
    total = int(np.prod(dims))
    values, counts = [], []
    for pair in rle.split(","):
        try:
            value_s, count_s = pair.split(":")
            value, count = int(value_s), int(count_s)
        except ValueError:
            raise ValueError(f"malformed RLE pair {pair!r}") from None
        if value not in (0, 1):
            raise ValueError(f"RLE values must be 0 or 1, got {value}")
        if count < 1:
            raise ValueError(f"RLE counts must be positive, got {count}")
        values.append(value)
        counts.append(count)
    if sum(counts) != total:
        raise ValueError(f"RLE counts sum to {sum(counts)}, expected {total} for dims {dims}")
    flat = np.repeat(np.array(values, dtype=np.uint8), counts)
    return Mask(flat.reshape(dims, order="F"))


def _data_path(header_path: Path) -> Path:
    return header_path.with_suffix(".bin")


def save_volume(volume: Volume, header_path: str | Path) -> None:
    """Write ``<stem>.json`` header plus ``<stem>.bin`` raw f32 blob."""
    header_path = Path(header_path)
    data_path = _data_path(header_path)
    blob = volume.data.astype("<f4").flatten(order="F").tobytes()
    header = {
        "dims": list(volume.dims),
        "spacing": list(volume.spacing),
        "dtype": VOLUME_DTYPE,
        "data": data_path.name,
    }
    data_path.write_bytes(blob)
    header_path.write_text(json.dumps(header, indent=2) + "\n")


def load_volume(header_path: str | Path) -> Volume:
    header_path = Path(header_path)
    header = _read_header(header_path, expected_rank=4, expected_dtype=VOLUME_DTYPE)
    if "spacing" not in header:
        raise ValueError(f"volume header {header_path} missing key 'spacing'")
    dims = tuple(header["dims"])
    blob = (header_path.parent / header["data"]).read_bytes()
    expected = int(np.prod(dims)) * 4
    if len(blob) != expected:
        raise ValueError(
            f"volume data file has {len(blob)} bytes, expected {expected} for dims {dims}"
        )
    flat = np.frombuffer(blob, dtype="<f4")
    data = flat.reshape(dims, order="F").astype(np.float64)
    return Volume(data=data, spacing=tuple(header["spacing"]), id=header_path.stem)


def save_mask(mask: Mask, header_path: str | Path) -> None:
    header_path = Path(header_path)
    data_path = _data_path(header_path)
    blob = mask.data.flatten(order="F").tobytes()
    header = {
        "dims": list(mask.dims),
        "dtype": MASK_DTYPE,
        "data": data_path.name,
    }
    data_path.write_bytes(blob)
    header_path.write_text(json.dumps(header, indent=2) + "\n")


def load_mask(header_path: str | Path) -> Mask:
    header_path = Path(header_path)
    header = _read_header(header_path, expected_rank=3, expected_dtype=MASK_DTYPE)
    dims = tuple(header["dims"])
    blob = (header_path.parent / header["data"]).read_bytes()
    expected = int(np.prod(dims))
    if len(blob) != expected:
        raise ValueError(
            f"mask data file has {len(blob)} bytes, expected {expected} for dims {dims}"
        )
    flat = np.frombuffer(blob, dtype=np.uint8)
    return Mask(flat.reshape(dims, order="F"))


def _read_header(header_path: Path, expected_rank: int, expected_dtype: str) -> dict:
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed header {header_path}: {exc}") from None
    for key in ("dims", "dtype", "data"):
        if key not in header:
            raise ValueError(f"header {header_path} missing key {key!r}")
    dims = header["dims"]
    if len(dims) != expected_rank or any(int(d) < 1 for d in dims):
        raise ValueError(f"header dims {dims} invalid (need {expected_rank} positive ints)")
    if header["dtype"] != expected_dtype:
        raise ValueError(f"unsupported dtype {header['dtype']!r}, expected {expected_dtype!r}")
    header["dims"] = [int(d) for d in dims]
    return header
