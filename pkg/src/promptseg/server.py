"""HTTP service for the viewer: volume listing, slice images, segmentation.

Segmentation requests are stateless: the full parameter set rides in each
request body, so the UI can sweep parameters without server-side sessions.
Slice pixels are min-max windowed per slice for display; raw values stay in
the volume files.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .evaluation import dice
from .network import Network, load_weights
from .search import SearchConfig, SpiralParams, segment
from .serialization import load_mask, load_volume, rle_encode
from .volume import Mask, Volume

# Slice plane per axis: (first image axis, second image axis) in volume order.
_PLANES = {"w": (1, 2), "h": (0, 2), "d": (0, 1)}


@dataclass
class SessionState:
    """Artifacts loaded at startup; never mutated while serving."""

    volumes: dict[str, Volume] = field(default_factory=dict)
    gt_masks: dict[str, Mask] = field(default_factory=dict)
    wsc: Network | None = None
    fsc: Network | None = None
    config: SearchConfig = field(default_factory=SearchConfig)

    @classmethod
    def from_data_dir(cls, data_dir: str | Path, wsc_path: str | Path | None = None,
                      fsc_path: str | Path | None = None,
                      config: SearchConfig | None = None) -> "SessionState":
        """Scan a dataset directory for volumes, gt masks, and default weights."""
        data_dir = Path(data_dir)
        if not data_dir.is_dir():
            raise FileNotFoundError(f"data directory {data_dir} does not exist")
        state = cls(config=config or SearchConfig())
        for header in sorted(data_dir.glob("*.json")):
            stem = header.stem
            if stem.endswith("_gt") or stem.endswith("_weights"):
                continue
            try:
                volume = load_volume(header)
            except ValueError:
                continue  # not a volume header (labels, manifests, ...)
            state.volumes[volume.id] = volume
            gt_header = data_dir / f"{stem}_gt.json"
            if gt_header.exists():
                state.gt_masks[volume.id] = load_mask(gt_header)
        if wsc_path is None and (data_dir / "wsc_weights.json").exists():
            wsc_path = data_dir / "wsc_weights.json"
        if fsc_path is None and (data_dir / "fsc_weights.json").exists():
            fsc_path = data_dir / "fsc_weights.json"
        if wsc_path is not None:
            state.wsc = load_weights(wsc_path, expect_head="global_average_pool")
        if fsc_path is not None:
            state.fsc = load_weights(fsc_path, expect_head="flatten")
        return state


class SegmentRequest(BaseModel):
    volume_id: str
    prompts: list[list[int]] = Field(min_length=1)
    tau: float | None = None
    alpha: float | None = None
    n_runs: int | None = None
    T: int | None = None
    mu: int | None = None
    crop_size: list[int] | None = None


def _window_slice(plane: np.ndarray) -> bytes:
    """Min-max window a 2D slice to uint8; constant slices map to zero."""
    lo, hi = float(plane.min()), float(plane.max())
    if hi > lo:
        scaled = np.rint((plane - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(plane)
    return scaled.astype(np.uint8).tobytes()


def _request_config(state: SessionState, req: SegmentRequest) -> SearchConfig:
    cfg = state.config
    spiral = cfg.spiral
    if req.T is not None or req.mu is not None:
        T = req.T if req.T is not None else spiral.T
        mu = req.mu if req.mu is not None else spiral.mu
        # Scale s with T so the spiral keeps its configured outer radius.
        spiral = SpiralParams(s=T / spiral.max_radius, mu=mu, T=T,
                              angle_offset=spiral.angle_offset)
    overrides: dict = {"spiral": spiral}
    if req.tau is not None:
        overrides["tau"] = req.tau
    if req.alpha is not None:
        overrides["alpha"] = req.alpha
    if req.n_runs is not None:
        overrides["n_runs"] = req.n_runs
    if req.crop_size is not None:
        overrides["crop_size"] = tuple(req.crop_size)
    return replace(cfg, **overrides)


def create_app(state: SessionState, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="promptseg", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request, exc):
        issues = [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors()]
        return JSONResponse(status_code=400, content={"detail": issues})

    @app.get("/api/volumes")
    def list_volumes():
        return [
            {"id": vol.id, "dims": list(vol.dims), "has_gt": vol.id in state.gt_masks}
            for vol in state.volumes.values()
        ]

    @app.get("/api/volumes/{volume_id}/slices/{axis}/{index}")
    def get_slice(volume_id: str, axis: str, index: int, channel: int = 0):
        volume = state.volumes.get(volume_id)
        if volume is None:
            raise HTTPException(404, f"unknown volume {volume_id!r}")
        if axis not in _PLANES:
            raise HTTPException(404, f"unknown axis {axis!r} (expected w, h, or d)")
        axis_num = "whd".index(axis)
        if not 0 <= index < volume.dims[axis_num]:
            raise HTTPException(404, f"slice index {index} out of range for axis {axis}")
        if not 0 <= channel < volume.dims[3]:
            raise HTTPException(422, f"channel {channel} out of range")
        plane = np.take(volume.data[..., channel], index, axis=axis_num)
        a0, a1 = _PLANES[axis]
        # Image rows are the second plane axis, columns the first (w,h,d order).
        return {
            "width": volume.dims[a0],
            "height": volume.dims[a1],
            "pixels": base64.b64encode(_window_slice(plane.T)).decode("ascii"),
        }

    @app.post("/api/segment")
    def segment_volume(req: SegmentRequest):
        volume = state.volumes.get(req.volume_id)
        if volume is None:
            raise HTTPException(404, f"unknown volume {req.volume_id!r}")
        if state.wsc is None or state.fsc is None:
            raise HTTPException(503, "classifiers not loaded; start the server with weights")
        for i, prompt in enumerate(req.prompts):
            if len(prompt) != 3:
                raise HTTPException(422, f"prompt {i} must have three coordinates")
            if any(not 0 <= p < d for p, d in zip(prompt, volume.spatial_dims)):
                raise HTTPException(
                    422,
                    f"prompt {i} at {tuple(prompt)} outside volume dims {volume.spatial_dims}",
                )
        try:
            config = _request_config(state, req)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        prompts = [tuple(p) for p in req.prompts]
        mask, diag = segment(volume, prompts, config, state.wsc, state.fsc)
        payload = {
            "mask_rle": rle_encode(mask),
            "dims": list(mask.dims),
            "crops_evaluated": diag.crops_evaluated,
            "runtime_ms": diag.runtime_s * 1000.0,
        }
        gt = state.gt_masks.get(req.volume_id)
        if gt is not None:
            payload["dice"] = dice(mask, gt)
        return payload

    @app.get("/api/config")
    def get_config():
        cfg = state.config
        return {
            "tau": cfg.tau,
            "alpha": cfg.alpha,
            "n_runs": cfg.n_runs,
            "T": cfg.spiral.T,
            "mu": cfg.spiral.mu,
            "crop_size": list(cfg.crop_size),
            "strategy": cfg.strategy,
        }

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="viewer")

    return app
