"""
Small parameter holders shared by the backbone, the PET modules and the head.
"""
from typing import Optional

from petforge.config.settings import LAYER_NORM_EPS
from petforge.engine import functional as F
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tensor


class Affine:
    """y = x W + b with W stored as [in, out]."""

    def __init__(self, registry: ParamRegistry, name: str, in_dim: int, out_dim: int, owner: str,
                 weight_init='xavier_uniform', bias: bool = True, bias_init='zeros'):
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = registry.declare(f"{name}.weight", (in_dim, out_dim), owner, weight_init)
        self.bias = registry.declare(f"{name}.bias", (out_dim,), owner, bias_init) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight.tensor, self.bias.tensor if self.bias is not None else None)


class LayerNorm:
    """Learnable affine layer normalization over the last axis."""

    def __init__(self, registry: ParamRegistry, name: str, dim: int, owner: str,
                 eps: float = LAYER_NORM_EPS):
        self.name = name
        self.eps = eps
        self.gamma = registry.declare(f"{name}.gamma", (dim,), owner, 'ones')
        self.beta = registry.declare(f"{name}.beta", (dim,), owner, 'zeros')

    def __call__(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gamma.tensor, self.beta.tensor, self.eps)


class Conv1d:
    """Valid 1-D convolution over [B, L, Cin] with optional dilation."""

    def __init__(self, registry: ParamRegistry, name: str, in_channels: int, out_channels: int,
                 kernel: int, owner: str, stride: int = 1, dilation: int = 1,
                 weight_init='he_normal'):
        self.kernel = kernel
        self.stride = stride
        self.dilation = dilation
        self.affine = Affine(registry, name, kernel * in_channels, out_channels, owner, weight_init)

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.affine.weight.tensor, self.affine.bias.tensor,
                        self.kernel, self.stride, self.dilation)

    def output_length(self, length: int) -> int:
        return F.output_length(length, self.kernel, self.stride, self.dilation)
