"""
Per-model PET modules and the per-forward context handed to the backbone.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from petforge.core.errors import ConfigurationError, ContractError
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tensor
from .adapters import HoulsbyAdapter, InnerAdapter, InterAdapter, learnable_scale
from .gates import GateBank, GateMap, as_broadcast, compute_gate
from .lora import LORA_TARGETS, LoraPair
from .method import MethodSpec
from .prompts import PromptBank, batch_prompts, gated_prompts

GATE_FAMILIES = ('prompt', 'adapter', 'inter')


class PetModules:
    """Every PET parameter of one model, declared in a fixed order."""

    def __init__(self, spec: MethodSpec, num_layers: int, dim: int, registry: ParamRegistry):
        self.spec = spec
        self.num_layers = num_layers
        self.dim = dim

        self.scale = spec.scale
        if spec.has_inner and spec.learnable_scale:
            self.scale = learnable_scale(registry, 0.5)

        self.inner: List[InnerAdapter] = []
        if spec.has_inner:
            self.inner = [InnerAdapter(registry, f"pet.inner.block{i}", dim, spec.bottleneck_dim,
                                       spec.adapter_mode, self.scale)
                          for i in range(1, num_layers + 1)]

        self.houlsby: List[Tuple[HoulsbyAdapter, HoulsbyAdapter]] = []
        if spec.has_houlsby:
            self.houlsby = [(HoulsbyAdapter(registry, f"pet.houlsby.block{i}.attn", dim, spec.bottleneck_dim),
                             HoulsbyAdapter(registry, f"pet.houlsby.block{i}.ffn", dim, spec.bottleneck_dim))
                            for i in range(1, num_layers + 1)]

        self.lora: List[Dict[str, LoraPair]] = []
        if spec.has_lora:
            self.lora = [{target: LoraPair(registry, f"pet.lora.block{i}.{target}", dim, spec.lora_rank,
                                           target, spec.lora_scaling)
                          for target in LORA_TARGETS}
                         for i in range(1, num_layers + 1)]

        self.inter: Optional[InterAdapter] = None
        if spec.has_inter:
            self.inter = InterAdapter(registry, num_layers, dim, spec.inter_dim)

        self.prompts: Optional[PromptBank] = None
        if spec.has_prompt:
            self.prompts = PromptBank(registry, spec.num_prompt_layers(num_layers), spec.prompt_length, dim)

        self.gates: Optional[GateBank] = None
        if spec.gated:
            self.gates = GateBank(
                registry, num_layers, dim,
                prompt_layers=spec.num_prompt_layers(num_layers) if spec.deep_prompt else 0,
                adapter_layers=num_layers if spec.has_inner else 0,
                inter=spec.has_inter)

    @property
    def prompt_length(self) -> int:
        return self.prompts.length if self.prompts is not None else 0

    def context(self, gate_overrides: Optional[Dict[str, float]] = None) -> 'PetContext':
        return PetContext(self, gate_overrides)


@dataclass
class LayerPet:
    """What block i needs to know about the active PET modules."""
    index: int
    prompt_rows: int = 0
    inner: Optional[InnerAdapter] = None
    houlsby: Optional[Tuple[HoulsbyAdapter, HoulsbyAdapter]] = None
    lora: Dict[str, LoraPair] = field(default_factory=dict)
    gate_map: Optional[GateMap] = None
    gate_override: Optional[float] = None
    gate_log: Optional[Dict[str, Tensor]] = None

    def adapter_gate(self, x_speech: Tensor) -> Union[None, float, Tensor]:
        """None when ungated; a constant under an override; otherwise [B, 1, 1]."""
        if self.gate_override is not None:
            return self.gate_override
        if self.gate_map is None:
            return None
        value = compute_gate(x_speech, self.gate_map)
        if self.gate_log is not None:
            self.gate_log[self.gate_map.name] = value
        return as_broadcast(value)


class PetContext:
    """Gate overrides and gate values for one forward pass."""

    def __init__(self, modules: PetModules, gate_overrides: Optional[Dict[str, float]] = None):
        overrides = dict(gate_overrides or {})
        unknown = set(overrides) - set(GATE_FAMILIES)
        if unknown:
            raise ConfigurationError(f"unknown gate families {sorted(unknown)}; expected {GATE_FAMILIES}")
        self.modules = modules
        self.num_layers = modules.num_layers
        self.overrides = overrides
        self.gate_values: Dict[str, Tensor] = {}

    @property
    def prompt_rows(self) -> int:
        return self.modules.prompt_length

    def layer(self, index: int) -> LayerPet:
        if not 1 <= index <= self.num_layers:
            raise ContractError(f"PET context covers layers 1..{self.num_layers}, asked for {index}")
        m = self.modules
        gates = m.gates
        return LayerPet(
            index=index,
            prompt_rows=self.prompt_rows,
            inner=m.inner[index - 1] if m.inner else None,
            houlsby=m.houlsby[index - 1] if m.houlsby else None,
            lora=m.lora[index - 1] if m.lora else {},
            gate_map=gates.adapter[index - 1] if gates is not None and gates.adapter else None,
            gate_override=self.overrides.get('adapter'),
            gate_log=self.gate_values,
        )

    def _gate(self, family: str, gate_map: Optional[GateMap], hidden: Tensor):
        if family in self.overrides:
            return self.overrides[family]
        if gate_map is None:
            return None
        value = compute_gate(hidden, gate_map)
        self.gate_values[gate_map.name] = value
        return as_broadcast(value)

    def prompt_input(self, index: int, previous_speech: Tensor, previous_prompt: Optional[Tensor]) -> Optional[Tensor]:
        """Rows prepended to block `index`: fresh gated prompts (deep) or the carried Z (shallow)."""
        bank = self.modules.prompts
        if bank is None:
            return None
        batch = previous_speech.shape[0]
        if self.modules.spec.deep_prompt or index == 1:
            gates = self.modules.gates
            gate_map = gates.prompt[index - 1] if gates is not None and gates.prompt else None
            g = self._gate('prompt', gate_map, previous_speech)
            return batch_prompts(gated_prompts(bank.prompt(index), g), batch)
        if previous_prompt is None:
            raise ContractError(f"shallow prompting needs Z from layer {index - 1}")
        return previous_prompt

    def inter_gate(self, combined: Tensor):
        gates = self.modules.gates
        return self._gate('inter', gates.inter if gates is not None else None, combined)
