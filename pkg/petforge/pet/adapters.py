"""
Bottleneck adapters: inner-layer (sequential / parallel), Houlsby and the inter-layer adapter.
"""
from typing import Callable, Optional, Sequence, Tuple, Union

from petforge.core.errors import ContractError, ShapeError
from petforge.engine import tensor as T
from petforge.engine.layers import Affine, LayerNorm
from petforge.engine.params import ParamRegistry, init_constant
from petforge.engine.tensor import Tensor

Gate = Union[None, float, Tensor]


class BottleneckAdapter:
    """LN(W_up relu(W_down h)); the up-projection starts at zero."""

    def __init__(self, registry: ParamRegistry, name: str, dim: int, bottleneck: int, owner: str):
        self.name = name
        self.dim = dim
        self.bottleneck = bottleneck
        self.down = Affine(registry, f"{name}.down", dim, bottleneck, owner)
        self.up = Affine(registry, f"{name}.up", bottleneck, dim, owner, weight_init='zeros')
        self.ln = LayerNorm(registry, f"{name}.ln", dim, owner)

    def check(self, h: Tensor):
        if h.shape[-1] != self.dim:
            raise ShapeError(f"adapter '{self.name}' expects width {self.dim}, got {h.shape}", name=self.name)

    def branch(self, h: Tensor) -> Tensor:
        self.check(h)
        return self.ln(self.up(T.relu(self.down(h))))


class InnerAdapter(BottleneckAdapter):
    def __init__(self, registry: ParamRegistry, name: str, dim: int, bottleneck: int,
                 mode: str = 'parallel', scale=0.5):
        super().__init__(registry, name, dim, bottleneck, owner='inner')
        self.mode = mode
        self.scale = scale


class HoulsbyAdapter(BottleneckAdapter):
    """h + LN(W_up relu(W_down h)), placed inside the residual stream."""

    def __init__(self, registry: ParamRegistry, name: str, dim: int, bottleneck: int):
        super().__init__(registry, name, dim, bottleneck, owner='houlsby')

    def __call__(self, h: Tensor) -> Tensor:
        return h + self.branch(h)


def learnable_scale(registry: ParamRegistry, initial: float = 0.5):
    """One scalar shared by every inner adapter."""
    return registry.declare('pet.inner.scale', (1,), 'inner', init_constant(initial))


def _scale_value(scale):
    return scale.tensor if hasattr(scale, 'tensor') else float(scale)


def _apply_gate(value: Tensor, gate: Gate) -> Tensor:
    return value if gate is None else gate * value


def inner_sequential(ffn_out: Tensor, adapter: InnerAdapter, gate: Gate = None) -> Tensor:
    """FFN(x) + LN(W_up f(W_down FFN(x)))."""
    if adapter.mode != 'sequential':
        raise ContractError(f"adapter '{adapter.name}' is {adapter.mode}, not sequential")
    return ffn_out + _apply_gate(adapter.branch(ffn_out), gate)


def inner_parallel(x: Tensor, adapter: InnerAdapter) -> Tensor:
    """Adapter branch LN(W_up f(W_down x)) read from the FFN input."""
    if adapter.mode != 'parallel':
        raise ContractError(f"adapter '{adapter.name}' is {adapter.mode}, not parallel")
    return adapter.branch(x)


def fuse_block_output(ffn_out: Tensor, z_parallel: Tensor, x: Tensor, scale, gate: Gate,
                      norm: Callable[[Tensor], Tensor]) -> Tensor:
    """norm(ffn_out + g * (s * z) + x); g=None means the ungated form."""
    if not (ffn_out.shape == z_parallel.shape == x.shape):
        raise ShapeError(f"fusion inputs differ: {ffn_out.shape}, {z_parallel.shape}, {x.shape}")
    scaled = z_parallel * _scale_value(scale)
    return norm(ffn_out + _apply_gate(scaled, gate) + x)


def houlsby_forward(block, x: Tensor, adapters: Tuple[HoulsbyAdapter, HoulsbyAdapter],
                    lora=None) -> Tensor:
    """Post-LN block with an adapter after MHSA and another after the FFN."""
    attn_adapter, ffn_adapter = adapters
    attended = attn_adapter(block.attention(x, lora))
    x1 = block.ln1(x + attended)
    return block.ln2(ffn_adapter(block.ffn(x1)) + x1)


def weighted_sum(hidden: Sequence[Tensor], layer_weights: Tensor) -> Tensor:
    """Sum of hidden states weighted by softmax(layer_weights)."""
    if layer_weights.shape != (len(hidden),):
        raise ContractError(f"{len(hidden)} hidden states but layer weights of shape {layer_weights.shape}")
    weights = T.softmax(layer_weights, axis=0)
    total = None
    for i, h in enumerate(hidden):
        term = h * weights[i]
        total = term if total is None else total + term
    return total


class InterAdapter:
    """Projection of the layer-weighted hidden sum: LN(relu(W_inter sum_i w_i H_i))."""

    def __init__(self, registry: ParamRegistry, num_layers: int, dim: int, inter_dim: int,
                 name: str = 'pet.inter'):
        self.num_layers = num_layers
        self.dim = dim
        self.inter_dim = inter_dim
        self.layer_weights = registry.declare(f"{name}.layer_weights", (num_layers,), 'inter', 'zeros')
        self.proj = Affine(registry, f"{name}.proj", dim, inter_dim, 'inter')
        self.ln = LayerNorm(registry, f"{name}.ln", inter_dim, 'inter')

    def combine(self, hidden: Sequence[Tensor]) -> Tensor:
        if len(hidden) != self.num_layers:
            raise ContractError(f"inter adapter expects {self.num_layers} layer outputs, got {len(hidden)}")
        return weighted_sum(hidden, self.layer_weights.tensor)

    def project(self, combined: Tensor) -> Tensor:
        return self.ln(T.relu(self.proj(combined)))


def inter_adapter(stack, inter: InterAdapter, gate=None) -> Tensor:
    """g * LN(f(W_inter sum_i w_i H_i)) over layers 1..N of `stack`.

    `gate` is None (ungated), a constant, or a callable computing the gate from
    the weighted sum.
    """
    combined = inter.combine(stack.layers)
    g = gate(combined) if callable(gate) else gate
    return _apply_gate(inter.project(combined), g)
