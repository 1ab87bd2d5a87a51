"""
Deep speaker prompts: learnable token rows prepended to each block input.
"""
from typing import List, Union

from petforge.core.errors import ContractError
from petforge.engine import tensor as T
from petforge.engine.params import Parameter, ParamRegistry
from petforge.engine.tensor import Tensor


class PromptBank:
    """P_i in R^{m x d}, Xavier-uniform initialized, one per prompted layer."""

    def __init__(self, registry: ParamRegistry, num_layers: int, length: int, dim: int):
        self.length = length
        self.dim = dim
        self.prompts: List[Parameter] = [
            registry.declare(f"pet.prompt.P{i}", (length, dim), 'prompt', 'xavier_uniform')
            for i in range(1, num_layers + 1)
        ]

    def __len__(self) -> int:
        return len(self.prompts)

    def prompt(self, layer: int) -> Tensor:
        if not 1 <= layer <= len(self.prompts):
            raise ContractError(f"no prompt for layer {layer} (bank holds {len(self.prompts)})")
        return self.prompts[layer - 1].tensor


def gated_prompts(prompt: Tensor, gate: Union[None, float, Tensor] = None) -> Tensor:
    """g * P; a [B, 1, 1] gate yields per-utterance prompts [B, m, d]."""
    if gate is None:
        return prompt
    return gate * prompt


def batch_prompts(prompt: Tensor, batch: int) -> Tensor:
    """Broadcast [m, d] (or pass through [B, m, d]) to the batch."""
    if prompt.ndim == 3:
        return prompt
    return T.broadcast_to(prompt, (batch,) + prompt.shape)
