"""
Post-LN Transformer block with the PET insertion points.
"""
from typing import Dict, Optional

from petforge.engine import functional as F
from petforge.engine.layers import Affine, LayerNorm
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tensor
from petforge.pet.adapters import fuse_block_output, houlsby_forward, inner_parallel, inner_sequential
from petforge.pet.context import LayerPet
from petforge.pet.lora import LoraPair, lora_forward
from .backbone_config import BackboneConfig


class TransformerBlock:
    """MHSA -> residual -> LN, then FFN (and adapter) -> residual -> LN.

    Parameters live under `backbone.block{index}.`.
    """

    def __init__(self, registry: ParamRegistry, index: int, config: BackboneConfig):
        prefix = f"backbone.block{index}"
        d = config.hidden_dim
        self.index = index
        self.dim = d
        self.num_heads = config.num_heads
        self.activation = config.activation

        self.query = Affine(registry, f"{prefix}.attention.query", d, d, 'backbone')
        self.key = Affine(registry, f"{prefix}.attention.key", d, d, 'backbone')
        self.value = Affine(registry, f"{prefix}.attention.value", d, d, 'backbone')
        self.output = Affine(registry, f"{prefix}.attention.output", d, d, 'backbone')
        self.ln1 = LayerNorm(registry, f"{prefix}.ln1", d, 'backbone')
        self.fc1 = Affine(registry, f"{prefix}.ffn.fc1", d, config.ffn_dim, 'backbone')
        self.fc2 = Affine(registry, f"{prefix}.ffn.fc2", config.ffn_dim, d, 'backbone')
        self.ln2 = LayerNorm(registry, f"{prefix}.ln2", d, 'backbone')

    def _project(self, target: str, x: Tensor, lora: Optional[Dict[str, LoraPair]]) -> Tensor:
        frozen = getattr(self, target)
        if lora and target in lora:
            return lora_forward(frozen, x, lora[target])
        return frozen(x)

    def _split_heads(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        return x.reshape(batch, length, self.num_heads, self.dim // self.num_heads).transpose(0, 2, 1, 3)

    def attention(self, x: Tensor, lora: Optional[Dict[str, LoraPair]] = None) -> Tensor:
        """Unmasked multi-head self-attention over every row of [B, S, d]."""
        batch, length, _ = x.shape
        q = self._split_heads(self._project('query', x, lora))
        k = self._split_heads(self.key(x))
        v = self._split_heads(self._project('value', x, lora))
        heads = F.scaled_dot_attention(q, k, v)
        return self.output(heads.transpose(0, 2, 1, 3).reshape(batch, length, self.dim))

    def ffn(self, x: Tensor) -> Tensor:
        return self.fc2(F.activation(self.fc1(x), self.activation))

    def __call__(self, x: Tensor, pet: Optional[LayerPet] = None) -> Tensor:
        lora = pet.lora if pet is not None else None
        if pet is not None and pet.houlsby is not None:
            return houlsby_forward(self, x, pet.houlsby, lora)

        x1 = self.ln1(x + self.attention(x, lora))
        hidden = self.ffn(x1)
        adapter = pet.inner if pet is not None else None
        if adapter is None:
            return self.ln2(hidden + x1)

        gate = pet.adapter_gate(x1[:, pet.prompt_rows:])
        if adapter.mode == 'sequential':
            return self.ln2(inner_sequential(hidden, adapter, gate) + x1)
        return fuse_block_output(hidden, inner_parallel(x1, adapter), x1, adapter.scale, gate, self.ln2)
