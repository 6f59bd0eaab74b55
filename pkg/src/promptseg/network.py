"""A small 3D conv network with hand-written forward and backward passes.

Architecture: three conv blocks (3x3x3 kernels, same padding, ReLU,
2x2x2 max pooling with ceil semantics) followed by either a global average
pool or a flatten, then a dense stack ending in a single sigmoid unit.
Ceil-mode pooling maps 10 -> 5 -> 3 -> 2 and 6 -> 3 -> 2 -> 1, so a 10x10x6
crop survives all three pool stages.

Everything runs in float64 and is deterministic given a seed. Convolution
uses im2col plus one GEMM per layer; backward passes are derived by hand and
validated against central finite differences (see training.gradient_check).

Shapes: batched inputs are (n, w, h, d, c); kernels are (3, 3, 3, c_in, c_out).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

KERNEL = 3
POOL = 2
HEADS = ("global_average_pool", "flatten")


@dataclass(frozen=True)
class NetworkSpec:
    """Hyperparameters that fix the parameter shapes."""

    in_channels: int = 2
    conv_filters: tuple[int, int, int] = (16, 32, 64)
    dense_widths: tuple[int, ...] = (64, 1)
    head: str = "global_average_pool"
    input_size: tuple[int, int, int] | None = None  # required for flatten head

    def __post_init__(self) -> None:
        if self.in_channels < 1:
            raise ValueError("in_channels must be >= 1")
        if len(self.conv_filters) != 3 or any(f < 1 for f in self.conv_filters):
            raise ValueError(f"conv_filters must be three positive ints, got {self.conv_filters}")
        if not self.dense_widths or self.dense_widths[-1] != 1:
            raise ValueError(f"dense_widths must end in 1, got {self.dense_widths}")
        if any(w < 1 for w in self.dense_widths):
            raise ValueError("dense widths must be positive")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.head == "flatten":
            if self.input_size is None:
                raise ValueError("flatten head requires a fixed input_size")
            object.__setattr__(self, "input_size", tuple(int(s) for s in self.input_size))
        object.__setattr__(self, "conv_filters", tuple(int(f) for f in self.conv_filters))
        object.__setattr__(self, "dense_widths", tuple(int(w) for w in self.dense_widths))

    def feature_size(self) -> int:
        """Width of the vector entering the dense stack."""
        if self.head == "global_average_pool":
            return self.conv_filters[-1]
        spatial = self.input_size
        for _ in range(3):
            spatial = tuple(pool_out(s) for s in spatial)
        return int(np.prod(spatial)) * self.conv_filters[-1]


def pool_out(n: int) -> int:
    """Output length of ceil-mode 2x stride-2 pooling."""
    return (n + 1) // 2


@dataclass(frozen=True)
class Network:
    """A spec plus its parameters, keyed conv{i}_w/conv{i}_b/dense{i}_w/dense{i}_b."""

    spec: NetworkSpec
    params: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        expected = parameter_shapes(self.spec)
        if list(self.params) != list(expected):
            raise ValueError(f"parameter names {list(self.params)} != expected {list(expected)}")
        for name, shape in expected.items():
            got = self.params[name].shape
            if got != shape:
                raise ValueError(f"parameter {name} has shape {got}, expected {shape}")

    def num_params(self) -> int:
        return sum(p.size for p in self.params.values())


def parameter_shapes(spec: NetworkSpec) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    c_in = spec.in_channels
    for i, c_out in enumerate(spec.conv_filters, start=1):
        shapes[f"conv{i}_w"] = (KERNEL, KERNEL, KERNEL, c_in, c_out)
        shapes[f"conv{i}_b"] = (c_out,)
        c_in = c_out
    width_in = spec.feature_size()
    for i, width in enumerate(spec.dense_widths, start=1):
        shapes[f"dense{i}_w"] = (width_in, width)
        shapes[f"dense{i}_b"] = (width,)
        width_in = width
    return shapes


def init_network(spec: NetworkSpec, seed: int) -> Network:
    """Uniform fan-in init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(spec).items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            fan_in = int(np.prod(shape[:-1]))
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape)
    return Network(spec=spec, params=params)


# --- layer primitives (batched, float64) ---


def conv3d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Same-padded 3x3x3 convolution via im2col + GEMM."""
    n, wd, ht, dp, c_in = x.shape
    c_out = w.shape[-1]
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (1, 1), (0, 0)))
    view = np.lib.stride_tricks.sliding_window_view(padded, (KERNEL, KERNEL, KERNEL), axis=(1, 2, 3))
    # view: (n, wd, ht, dp, c_in, 3, 3, 3) -> rows over voxels, cols over (c_in, kw, kh, kd)
    cols = view.reshape(n * wd * ht * dp, c_in * KERNEL**3)
    kern = w.transpose(3, 0, 1, 2, 4).reshape(c_in * KERNEL**3, c_out)
    out = cols @ kern + b
    out = out.reshape(n, wd, ht, dp, c_out)
    return out, (cols, kern, x.shape, w.shape)


def conv3d_backward(gout: np.ndarray, cache):
    cols, kern, x_shape, w_shape = cache
    n, wd, ht, dp, c_in = x_shape
    c_out = w_shape[-1]
    g2 = gout.reshape(-1, c_out)
    gw = (cols.T @ g2).reshape(c_in, KERNEL, KERNEL, KERNEL, c_out).transpose(1, 2, 3, 0, 4)
    gb = g2.sum(axis=0)
    gcols = (g2 @ kern.T).reshape(n, wd, ht, dp, c_in, KERNEL, KERNEL, KERNEL)
    gpad = np.zeros((n, wd + 2, ht + 2, dp + 2, c_in))
    for kw in range(KERNEL):
        for kh in range(KERNEL):
            for kd in range(KERNEL):
                gpad[:, kw : kw + wd, kh : kh + ht, kd : kd + dp, :] += gcols[..., kw, kh, kd]
    gx = gpad[:, 1:-1, 1:-1, 1:-1, :]
    return gx, gw, gb


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(gout: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return gout * mask


def maxpool_forward(x: np.ndarray):
    """2x2x2 stride-2 max pooling, ceil mode (odd edges padded with -inf)."""
    n, wd, ht, dp, c = x.shape
    pw, ph, pd = wd % 2, ht % 2, dp % 2
    padded = np.pad(x, ((0, 0), (0, pw), (0, ph), (0, pd), (0, 0)), constant_values=-np.inf)
    w2, h2, d2 = pool_out(wd), pool_out(ht), pool_out(dp)
    blocks = padded.reshape(n, w2, POOL, h2, POOL, d2, POOL, c)
    blocks = blocks.transpose(0, 1, 3, 5, 7, 2, 4, 6).reshape(n, w2, h2, d2, c, POOL**3)
    idx = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return out, (idx, x.shape)


def maxpool_backward(gout: np.ndarray, cache) -> np.ndarray:
    idx, x_shape = cache
    n, wd, ht, dp, c = x_shape
    w2, h2, d2 = pool_out(wd), pool_out(ht), pool_out(dp)
    gblocks = np.zeros((n, w2, h2, d2, c, POOL**3))
    np.put_along_axis(gblocks, idx[..., None], gout[..., None], axis=-1)
    gblocks = gblocks.reshape(n, w2, h2, d2, c, POOL, POOL, POOL).transpose(0, 1, 5, 2, 6, 3, 7, 4)
    gpad = gblocks.reshape(n, w2 * POOL, h2 * POOL, d2 * POOL, c)
    return gpad[:, :wd, :ht, :dp, :]


def global_pool_forward(x: np.ndarray):
    n = x.shape[0]
    out = x.mean(axis=(1, 2, 3))
    return out, x.shape


def global_pool_backward(gout: np.ndarray, x_shape) -> np.ndarray:
    n, wd, ht, dp, c = x_shape
    scale = 1.0 / (wd * ht * dp)
    return np.broadcast_to(gout[:, None, None, None, :], x_shape) * scale


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    return x @ w + b, (x, w)


def dense_backward(gout: np.ndarray, cache):
    x, w = cache
    return gout @ w.T, x.T @ gout, gout.sum(axis=0)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# --- full network ---


def forward_batch(net: Network, x: np.ndarray):
    """Probabilities for a batch, plus the cache needed for backward."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 5:
        raise ValueError(f"batch input must be rank 5 (n,w,h,d,c), got rank {x.ndim}")
    if x.shape[-1] != net.spec.in_channels:
        raise ValueError(f"input has {x.shape[-1]} channels, spec wants {net.spec.in_channels}")
    if net.spec.head == "flatten" and x.shape[1:4] != net.spec.input_size:
        raise ValueError(
            f"flatten head is fixed to input size {net.spec.input_size}, got {x.shape[1:4]}"
        )
    caches = []
    h = x
    for i in range(1, 4):
        h, c_conv = conv3d_forward(h, net.params[f"conv{i}_w"], net.params[f"conv{i}_b"])
        h, c_relu = relu_forward(h)
        h, c_pool = maxpool_forward(h)
        caches.append((c_conv, c_relu, c_pool))
    if net.spec.head == "global_average_pool":
        feats, c_head = global_pool_forward(h)
    else:
        c_head = h.shape
        feats = h.reshape(h.shape[0], -1)
    caches.append(c_head)
    dense_caches = []
    v = feats
    n_dense = len(net.spec.dense_widths)
    for i in range(1, n_dense + 1):
        v, c_d = dense_forward(v, net.params[f"dense{i}_w"], net.params[f"dense{i}_b"])
        dense_caches.append(c_d)
        if i < n_dense:
            v, c_r = relu_forward(v)
            dense_caches.append(c_r)
    caches.append(dense_caches)
    logits = v[:, 0]
    return sigmoid(logits), logits, caches


def backward_from_logits(net: Network, caches, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients given dLoss/dlogit per sample.

    Pairing BCE with the sigmoid keeps backward exact: dLoss/dlogit = p - y,
    so the sigmoid itself never needs differentiating here.
    """
    conv_caches = caches[:3]
    c_head = caches[3]
    dense_caches = list(caches[4])
    grads: dict[str, np.ndarray] = {}

    g = dlogits[:, None]
    n_dense = len(net.spec.dense_widths)
    for i in range(n_dense, 0, -1):
        if i < n_dense:
            g = relu_backward(g, dense_caches.pop())
        g, gw, gb = dense_backward(g, dense_caches.pop())
        grads[f"dense{i}_w"] = gw
        grads[f"dense{i}_b"] = gb

    if net.spec.head == "global_average_pool":
        g = global_pool_backward(g, c_head)
    else:
        g = g.reshape(c_head)

    for i in range(3, 0, -1):
        c_conv, c_relu, c_pool = conv_caches[i - 1]
        g = maxpool_backward(g, c_pool)
        g = relu_backward(g, c_relu)
        g, gw, gb = conv3d_backward(g, c_conv)
        grads[f"conv{i}_w"] = gw
        grads[f"conv{i}_b"] = gb
    return {name: grads[name] for name in net.params}


def forward(net: Network, x: np.ndarray) -> float:
    """Probability for a single (w,h,d,c) input."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"input must be rank 4 (w,h,d,c), got rank {x.ndim}")
    probs, _, _ = forward_batch(net, x[None])
    return float(probs[0])


# --- weight files ---


def save_weights(net: Network, manifest_path: str | Path) -> None:
    """JSON manifest (spec, shapes, sha256 per parameter) plus raw f64le blob."""
    manifest_path = Path(manifest_path)
    blob_path = manifest_path.with_suffix(".bin")
    entries = []
    chunks = []
    for name, p in net.params.items():
        raw = np.ascontiguousarray(p, dtype="<f8").tobytes()
        entries.append({
            "name": name,
            "shape": list(p.shape),
            "sha256": hashlib.sha256(raw).hexdigest(),
        })
        chunks.append(raw)
    manifest = {
        "spec": spec_to_dict(net.spec),
        "dtype": "f64le",
        "data": blob_path.name,
        "parameters": entries,
    }
    blob_path.write_bytes(b"".join(chunks))
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")


def load_weights(manifest_path: str | Path, expect_head: str | None = None) -> Network:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    spec = spec_from_dict(manifest["spec"])
    if expect_head is not None and spec.head != expect_head:
        raise ValueError(f"weights have head {spec.head!r}, expected {expect_head!r}")
    if manifest.get("dtype") != "f64le":
        raise ValueError(f"unsupported weights dtype {manifest.get('dtype')!r}")
    blob = (manifest_path.parent / manifest["data"]).read_bytes()
    params: dict[str, np.ndarray] = {}
    offset = 0
    for entry in manifest["parameters"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape)) * 8
        raw = blob[offset : offset + nbytes]
        if len(raw) != nbytes:
            raise ValueError(f"weights blob truncated at parameter {entry['name']!r}")
        if hashlib.sha256(raw).hexdigest() != entry["sha256"]:
            raise ValueError(f"checksum mismatch for parameter {entry['name']!r}")
        params[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise ValueError(f"weights blob has {len(blob) - offset} trailing bytes")
    return Network(spec=spec, params=params)


def spec_to_dict(spec: NetworkSpec) -> dict:
    return {
        "in_channels": spec.in_channels,
        "conv_filters": list(spec.conv_filters),
        "dense_widths": list(spec.dense_widths),
        "head": spec.head,
        "input_size": list(spec.input_size) if spec.input_size else None,
    }


def spec_from_dict(d: dict) -> NetworkSpec:
    return NetworkSpec(
        in_channels=int(d["in_channels"]),
        conv_filters=tuple(d["conv_filters"]),
        dense_widths=tuple(d["dense_widths"]),
        head=d["head"],
        input_size=tuple(d["input_size"]) if d.get("input_size") else None,
    )
