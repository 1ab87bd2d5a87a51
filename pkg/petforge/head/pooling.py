"""
Layer aggregation and statistics pooling.
"""
from typing import Optional

from petforge.config.settings import STATS_POOL_EPS
from petforge.core.errors import InputError
from petforge.engine import tensor as T
from petforge.engine.tensor import Tensor
from petforge.pet.adapters import InterAdapter, inter_adapter, weighted_sum


def aggregate(stack, inter: Optional[InterAdapter] = None, layer_weights: Optional[Tensor] = None,
              gate=None) -> Tensor:
    """Frames fed to the backend.

    Inter-layer adapter when present, else the softmax-weighted sum of
    H_1..H_N, else the last layer alone.
    """
    if inter is not None:
        return inter_adapter(stack, inter, gate)
    if layer_weights is not None:
        return weighted_sum(stack.layers, layer_weights)
    return stack.last


def stats_pool(frames: Tensor, eps: float = STATS_POOL_EPS) -> Tensor:
    """[..., T, c] -> [..., 2c]: per-channel mean then population std."""
    if frames.ndim < 2 or frames.shape[-2] == 0:
        raise InputError(f"statistics pooling needs at least one frame, got shape {frames.shape}")
    mu = frames.mean(axis=-2, keepdims=True)
    centered = frames - mu
    var = (centered * centered).mean(axis=-2)
    std = T.sqrt(var + eps)
    return T.concat([mu.reshape(std.shape), std], axis=-1)
