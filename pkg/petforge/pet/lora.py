"""
Low-rank updates of the frozen query and value projections.
"""
from typing import Callable

from petforge.core.errors import ConfigurationError
from petforge.engine import functional as F
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tensor

LORA_TARGETS = ('query', 'value')


class LoraPair:
    """A [d, r] random, B [r, d] zero: the initial delta is exactly zero."""

    def __init__(self, registry: ParamRegistry, name: str, dim: int, rank: int, target: str,
                 scaling: float = 1.0):
        if target not in LORA_TARGETS:
            raise ConfigurationError(f"LoRA target must be one of {LORA_TARGETS}, got '{target}'")
        if not 0 < rank <= dim:
            raise ConfigurationError(f"LoRA rank {rank} must lie in (0, {dim}]")
        self.dim = dim
        self.rank = rank
        self.target = target
        self.scaling = scaling
        self.A = registry.declare(f"{name}.A", (dim, rank), 'lora', 'he_normal')
        self.B = registry.declare(f"{name}.B", (rank, dim), 'lora', 'zeros')


def lora_forward(frozen: Callable[[Tensor], Tensor], x: Tensor, lora: LoraPair) -> Tensor:
    """frozen(x) + (alpha / r) * (x A) B."""
    if lora.rank > x.shape[-1]:
        raise ConfigurationError(f"LoRA rank {lora.rank} exceeds width {x.shape[-1]}")
    delta = F.linear(F.linear(x, lora.A.tensor), lora.B.tensor)
    return frozen(x) + delta * lora.scaling
