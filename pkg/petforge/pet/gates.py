"""
Sigmoid gates estimated from time-pooled hidden states.
"""
from typing import Dict, List, Optional

from petforge.core.errors import InputError
from petforge.engine import tensor as T
from petforge.engine.layers import Affine
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tensor


class GateMap:
    """Affine d -> 1 followed by a sigmoid; zero-initialized, so every gate starts at 0.5."""

    def __init__(self, registry: ParamRegistry, name: str, dim: int):
        self.name = name
        self.affine = Affine(registry, name, dim, 1, 'gate', weight_init='zeros')


def compute_gate(hidden: Tensor, gate_map: GateMap) -> Tensor:
    """sigmoid(affine(mean over time)): [..., T, d] -> [...]."""
    if hidden.ndim < 2 or hidden.shape[-2] == 0:
        raise InputError(f"gate '{gate_map.name}' needs at least one frame, got shape {hidden.shape}")
    pooled = hidden.mean(axis=-2)
    value = T.sigmoid(gate_map.affine(pooled))
    return value.reshape(value.shape[:-1])


def as_broadcast(gate: Tensor) -> Tensor:
    """[B] gate -> [B, 1, 1] so it scales whole utterances of [B, S, d]."""
    return gate.reshape(gate.shape + (1, 1))


class GateBank:
    """Prompt gates (one per prompted layer), adapter gates (one per layer) and the inter gate."""

    def __init__(self, registry: ParamRegistry, num_layers: int, dim: int,
                 prompt_layers: int, adapter_layers: int, inter: bool):
        self.prompt: List[GateMap] = [GateMap(registry, f"pet.gate.prompt{i}", dim)
                                      for i in range(1, prompt_layers + 1)]
        self.adapter: List[GateMap] = [GateMap(registry, f"pet.gate.adapter{i}", dim)
                                       for i in range(1, adapter_layers + 1)]
        self.inter: Optional[GateMap] = GateMap(registry, 'pet.gate.inter', dim) if inter else None

    def maps(self) -> Dict[str, GateMap]:
        found = {g.name: g for g in self.prompt + self.adapter}
        if self.inter is not None:
            found[self.inter.name] = self.inter
        return found
