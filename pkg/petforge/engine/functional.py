"""
Composite operations built from the tensor primitives.
"""
import math
from typing import Optional, Sequence, Union

import numpy as np

from petforge.config.settings import LAYER_NORM_EPS
from petforge.core.errors import ConfigurationError, DimensionError, InputError
from petforge.engine import tensor as T
from petforge.engine.tensor import Tensor


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x[..., in] @ weight[in, out] + bias[out]."""
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"linear: input {x.shape} does not fit weight {weight.shape}")
    lead = x.shape[:-1]
    flat = x.reshape(-1, x.shape[-1]) if x.ndim != 2 else x
    out = T.matmul(flat, weight)
    if bias is not None:
        out = out + bias
    return out.reshape(lead + (weight.shape[1],)) if x.ndim != 2 else out


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize over the last axis with the population variance, then scale and shift."""
    d = x.shape[-1] if x.ndim else 0
    if d == 0:
        raise DimensionError("layer_norm over an empty last axis")
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm: gamma {gamma.shape} / beta {beta.shape} do not match width {d}")
    if eps < 0:
        raise ConfigurationError(f"layer_norm eps must be non-negative, got {eps}")
    centered = x - x.mean(axis=-1, keepdims=True)
    var = (centered * centered).mean(axis=-1, keepdims=True)
    return centered / T.sqrt(var + float(eps)) * gamma + beta


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    if not -x.ndim <= axis < max(x.ndim, 1):
        raise DimensionError(f"softmax axis {axis} out of range for shape {x.shape}")
    return T.softmax(x, axis)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    return T.log_softmax(x, axis)


ACTIVATIONS = {
    'relu': T.relu,
    'gelu': T.gelu,
    'sigmoid': T.sigmoid,
    'tanh': T.tanh,
}


def activation(x: Tensor, kind: str) -> Tensor:
    fn = ACTIVATIONS.get(kind)
    if fn is None:
        raise ConfigurationError(f"unknown activation '{kind}' (expected one of {sorted(ACTIVATIONS)})")
    return fn(x)


def cross_entropy(logits: Tensor, labels: Union[int, Sequence[int], np.ndarray]) -> Tensor:
    """Mean negative log-likelihood; logits [C] with an int label or [B, C] with B labels."""
    num_classes = logits.shape[-1]
    labels_arr = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if np.any(labels_arr < 0) or np.any(labels_arr >= num_classes):
        raise InputError(f"label out of range for {num_classes} classes: {labels_arr.tolist()}")
    log_probs = T.log_softmax(logits, axis=-1)
    if logits.ndim == 1:
        if labels_arr.size != 1:
            raise InputError("a single logit vector takes exactly one label")
        return -log_probs[int(labels_arr[0])]
    if logits.ndim != 2 or labels_arr.size != logits.shape[0]:
        raise DimensionError(f"cross_entropy: logits {logits.shape} vs {labels_arr.size} labels")
    picked = log_probs[np.arange(logits.shape[0]), labels_arr]
    return -picked.mean()


def output_length(length: int, kernel: int, stride: int = 1, dilation: int = 1) -> int:
    """Frames produced by a valid 1-D convolution; zero when the input is too short."""
    span = dilation * (kernel - 1) + 1
    if length < span:
        return 0
    return (length - span) // stride + 1


def frames(x: Tensor, kernel: int, stride: int = 1, dilation: int = 1) -> Tensor:
    """Sliding windows over time: [B, L, C] -> [B, T, kernel, C]."""
    count = output_length(x.shape[1], kernel, stride, dilation)
    if count < 1:
        span = dilation * (kernel - 1) + 1
        raise InputError(f"sequence of {x.shape[1]} frames is shorter than the window span {span}")
    index = np.arange(count)[:, None] * stride + np.arange(kernel)[None, :] * dilation
    return x[:, index, :]


def conv1d(x: Tensor, weight: Tensor, bias: Optional[Tensor], kernel: int,
           stride: int = 1, dilation: int = 1) -> Tensor:
    """Valid convolution of [B, L, Cin] with weight [kernel * Cin, Cout]."""
    windows = frames(x, kernel, stride, dilation)
    batch, count = windows.shape[0], windows.shape[1]
    return linear(windows.reshape(batch, count, kernel * x.shape[2]), weight, bias)


def pad_time(x: Tensor, left: int, right: int) -> Tensor:
    """Zero-pad the time axis of [B, L, C]."""
    parts = []
    if left:
        parts.append(T.zeros((x.shape[0], left, x.shape[2]), dtype=x.dtype))
    parts.append(x)
    if right:
        parts.append(T.zeros((x.shape[0], right, x.shape[2]), dtype=x.dtype))
    return T.concat(parts, axis=1) if len(parts) > 1 else x


def grouped_conv_same(x: Tensor, weight: Tensor, bias: Tensor, kernel: int, groups: int) -> Tensor:
    """'Same'-length grouped convolution of [B, L, C] with weight [groups, kernel * C/groups, C/groups]."""
    batch, length, channels = x.shape
    if channels % groups:
        raise DimensionError(f"{channels} channels do not split into {groups} groups")
    per_group = channels // groups
    left = kernel // 2
    padded = pad_time(x, left, kernel - 1 - left)
    windows = frames(padded, kernel)                                       # [B, L, K, C]
    windows = windows.reshape(batch, length, kernel, groups, per_group)
    windows = windows.transpose(3, 0, 1, 2, 4).reshape(groups, batch * length, kernel * per_group)
    out = T.matmul(windows, weight)                                        # [G, B*L, C/G]
    out = out.reshape(groups, batch, length, per_group).transpose(1, 2, 0, 3)
    return out.reshape(batch, length, channels) + bias


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """softmax(q k^T / sqrt(dk)) v over the last two axes."""
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = T.matmul(q, T.swapaxes(k, -1, -2)) * scale
    return T.matmul(T.softmax(scores, axis=-1), v)
