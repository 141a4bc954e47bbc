"""Learned competition function: a small set transformer over the population.

Rows are individuals; the input features per row are the raw fitness and the
descriptor coordinates, each standardized across the population. Four
pre-normalization residual blocks (multi-head self-attention followed by a
tanh MLP) refine the row embeddings, and a final projection reads one scalar
competition fitness per row from the full feature width.

All parameters live in one flat float64 vector with a fixed, versioned
layout, which is what the meta-optimizer perturbs. The forward pass is
written over the trailing two axes, so a leading batch axis (one slice per
candidate parameter vector) broadcasts through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import streams

# Bump when the parameter layout or forward semantics change; serialized
# checkpoints carry this tag and refuse to load across versions.
LAYOUT_VERSION = "set-transformer-v1"

EPS = 1e-8


@dataclass(frozen=True)
class NetConfig:
    """Architecture hyperparameters; the default is the 4x16 set transformer.

    The default MLP hidden width equals the feature width, which keeps the
    parameter count for 2-D descriptors inside the intended budget of a few
    thousand entries.
    """

    descriptor_dim: int = 2
    layers: int = 4
    features: int = 16
    heads: int = 4
    mlp_hidden: int = 16

    def __post_init__(self):
        if min(self.descriptor_dim, self.layers, self.features, self.heads, self.mlp_hidden) < 1:
            raise ValueError("all NetConfig fields must be >= 1")
        if self.features % self.heads != 0:
            raise ValueError(
                f"features ({self.features}) must be divisible by heads ({self.heads})"
            )

    @property
    def head_dim(self) -> int:
        return self.features // self.heads

    @property
    def input_dim(self) -> int:
        return self.descriptor_dim + 1


def layout(config: NetConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) pairs defining the flat parameter vector."""
    F, H = config.features, config.mlp_hidden
    shapes = [("embed.w", (config.input_dim, F)), ("embed.b", (F,))]
    for i in range(config.layers):
        p = f"layers.{i}."
        shapes += [
            (p + "norm1.gain", (F,)),
            (p + "norm1.bias", (F,)),
            (p + "attn.wq", (F, F)),
            (p + "attn.wk", (F, F)),
            (p + "attn.wv", (F, F)),
            (p + "attn.wo", (F, F)),
            (p + "norm2.gain", (F,)),
            (p + "norm2.bias", (F,)),
            (p + "mlp.w1", (F, H)),
            (p + "mlp.b1", (H,)),
            (p + "mlp.w2", (H, F)),
            (p + "mlp.b2", (F,)),
        ]
    shapes += [("head.w", (F, 1)), ("head.b", (1,))]
    return shapes


def param_count(config: NetConfig) -> int:
    return sum(int(np.prod(shape)) for _, shape in layout(config))


def unflatten(theta: np.ndarray, config: NetConfig) -> dict[str, np.ndarray]:
    """Views into the flat vector, keyed by layout name. No copies.

    ``theta`` may carry one leading batch axis (stacked candidates); every
    view then keeps that axis in front.
    """
    theta = np.asarray(theta, dtype=float)
    expected = param_count(config)
    if theta.shape[-1] != expected:
        raise ValueError(
            f"theta has {theta.shape[-1]} entries but the layout for "
            f"descriptor_dim={config.descriptor_dim} needs {expected}"
        )
    batch = theta.shape[:-1]
    tensors = {}
    offset = 0
    for name, shape in layout(config):
        size = int(np.prod(shape))
        tensors[name] = theta[..., offset : offset + size].reshape(batch + shape)
        offset += size
    return tensors


def flatten(tensors: dict[str, np.ndarray], config: NetConfig) -> np.ndarray:
    parts = [np.asarray(tensors[name], dtype=float).reshape(-1) for name, _ in layout(config)]
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class LqdParams:
    """Flat parameter vector plus the config it was laid out for."""

    config: NetConfig
    theta: np.ndarray
    layout_version: str = LAYOUT_VERSION

    def __post_init__(self):
        theta = np.ascontiguousarray(self.theta, dtype=float)
        if theta.ndim != 1 or theta.size != param_count(self.config):
            raise ValueError(
                f"theta must be a flat vector of length {param_count(self.config)}, "
                f"got shape {np.shape(self.theta)}"
            )
        if self.layout_version != LAYOUT_VERSION:
            raise ValueError(
                f"layout version {self.layout_version!r} does not match {LAYOUT_VERSION!r}"
            )
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "_tensors", unflatten(theta, self.config))

    @property
    def tensors(self) -> dict[str, np.ndarray]:
        return self._tensors


def init_params(config: NetConfig, seed: int) -> LqdParams:
    """Scaled-normal weights (std 1/sqrt(fan_in)), unit norm gains, zero biases."""
    rng = streams.stream(seed)
    tensors = {}
    for name, shape in layout(config):
        if name.endswith(".gain"):
            tensors[name] = np.ones(shape)
        elif len(shape) == 2:
            tensors[name] = rng.standard_normal(shape) / np.sqrt(shape[0])
        else:
            tensors[name] = np.zeros(shape)
    return LqdParams(config=config, theta=flatten(tensors, config))


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------


def featurize(f, d) -> np.ndarray:
    """Per-column standardized [fitness, descriptors] feature rows.

    Accepts a leading batch axis on both arguments. -inf fitness entries
    (eliminated rows that survived truncation) are imputed as
    min(finite) - 3 * std(finite) before standardization so the network sees
    them as merely very bad.
    """
    f = np.asarray(f, dtype=float)
    d = np.asarray(d, dtype=float)
    if d.shape[:-1] != f.shape:
        raise ValueError(f"descriptor rows {d.shape} do not match fitness shape {f.shape}")
    neg = np.isneginf(f)
    if np.any(neg):
        finite = ~neg
        count = np.sum(finite, axis=-1, keepdims=True)
        safe = np.maximum(count, 1)
        mean = np.sum(np.where(finite, f, 0.0), axis=-1, keepdims=True) / safe
        var = np.sum(np.where(finite, f - mean, 0.0) ** 2, axis=-1, keepdims=True) / safe
        low = np.min(np.where(finite, f, np.inf), axis=-1, keepdims=True)
        replacement = np.where(count > 0, low - 3.0 * np.sqrt(var), 0.0)
        f = np.where(neg, replacement, f)
    cols = np.concatenate([f[..., np.newaxis], d], axis=-1)
    mean = cols.mean(axis=-2, keepdims=True)
    std = cols.std(axis=-2, keepdims=True)
    return (cols - mean) / np.maximum(std, EPS)


def _vec(t):
    """Expose vector parameters as (..., 1, F) so batched slices broadcast over rows."""
    return t[..., np.newaxis, :]


def _layer_norm(y, gain, bias):
    mean = y.mean(axis=-1, keepdims=True)
    centered = y - mean
    var = np.einsum("...i,...i->...", centered, centered)[..., np.newaxis]
    var /= y.shape[-1]
    return centered / np.sqrt(var + EPS) * _vec(gain) + _vec(bias)


def _split_heads(a, heads, head_dim):
    a = a.reshape(a.shape[:-1] + (heads, head_dim))
    return np.swapaxes(a, -2, -3)  # (..., H, N, head_dim)


def _self_attention(y, tensors, prefix, config: NetConfig):
    hd = config.head_dim
    q = _split_heads(y @ tensors[prefix + "attn.wq"], config.heads, hd)
    k = _split_heads(y @ tensors[prefix + "attn.wk"], config.heads, hd)
    v = _split_heads(y @ tensors[prefix + "attn.wv"], config.heads, hd)
    q /= np.sqrt(hd)  # scaled dot-product, folded into q before the N x N matmul
    weights = q @ np.swapaxes(k, -1, -2)
    weights -= weights.max(axis=-1, keepdims=True)
    np.exp(weights, out=weights)
    weights /= weights.sum(axis=-1, keepdims=True)
    context = np.swapaxes(weights @ v, -2, -3)  # (..., N, H, head_dim)
    context = context.reshape(y.shape)
    return context @ tensors[prefix + "attn.wo"]


def attention_block(y, tensors, prefix, config: NetConfig):
    """Pre-norm residual block: attention sub-layer then tanh MLP sub-layer."""
    normed = _layer_norm(y, tensors[prefix + "norm1.gain"], tensors[prefix + "norm1.bias"])
    y = y + _self_attention(normed, tensors, prefix, config)
    normed = _layer_norm(y, tensors[prefix + "norm2.gain"], tensors[prefix + "norm2.bias"])
    hidden = np.tanh(normed @ tensors[prefix + "mlp.w1"] + _vec(tensors[prefix + "mlp.b1"]))
    return y + hidden @ tensors[prefix + "mlp.w2"] + _vec(tensors[prefix + "mlp.b2"])


def forward_features(tensors: dict[str, np.ndarray], config: NetConfig, z: np.ndarray) -> np.ndarray:
    """Transformer trunk from featurized rows to scalar scores per row.

    ``z`` is (..., N, D+1); stacked candidate weights with a leading batch
    axis broadcast against matching leading axes of ``z``.
    """
    y = z @ tensors["embed.w"] + _vec(tensors["embed.b"])
    for i in range(config.layers):
        y = attention_block(y, tensors, f"layers.{i}.", config)
    out = y @ tensors["head.w"] + _vec(tensors["head.b"])
    return out[..., 0]


def forward_competition(params: LqdParams, f, d) -> np.ndarray:
    """Competition fitness per row for one population."""
    f = np.asarray(f, dtype=float)
    d = np.atleast_2d(np.asarray(d, dtype=float))
    if f.ndim != 1 or d.ndim != 2 or d.shape[0] != f.size:
        raise ValueError(f"expected f (N,) and d (N, D); got {f.shape} and {d.shape}")
    if d.shape[1] != params.config.descriptor_dim:
        raise ValueError(
            f"descriptor dim {d.shape[1]} does not match the parameter layout "
            f"(descriptor_dim={params.config.descriptor_dim})"
        )
    z = featurize(f, d)
    return forward_features(params.tensors, params.config, z)
