"""
Backbone + PET modules + speaker-verification head, wired by one MethodSpec.
"""
from typing import Dict, Optional, Sequence

import numpy as np

from petforge.engine import functional as F
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tensor
from petforge.head.backends import Classifier, build_backend
from petforge.head.head_config import HeadConfig
from petforge.head.pooling import aggregate
from petforge.pet.context import PetContext, PetModules
from petforge.pet.method import MethodSpec
from .backbone import Backbone, HiddenStack, encode
from .backbone_config import BackboneConfig


class SpeakerModel:
    """Declares every parameter in a fixed order and applies the freezing policy."""

    def __init__(self, backbone_config: BackboneConfig, spec: MethodSpec, head_config: Optional[HeadConfig],
                 num_speakers: int, registry: ParamRegistry):
        spec.validate(backbone_config.hidden_dim)
        self.spec = spec
        self.registry = registry
        self.backbone = Backbone(backbone_config, registry)
        self.pet = PetModules(spec, backbone_config.num_layers, backbone_config.hidden_dim, registry)

        self.layer_weights = None
        if spec.uses_layer_weights:
            self.layer_weights = registry.declare('head.layer_weights', (backbone_config.num_layers,),
                                                  'aggregate', 'zeros')

        self.backend = None
        self.classifier = None
        if head_config is not None:
            self.backend = build_backend(head_config, self.frame_dim, registry)
            if num_speakers > 0:
                self.classifier = Classifier(registry, head_config.embed_dim, num_speakers)

        registry.set_trainable(lambda p: spec.is_trainable(p.name, p.owner))

    @property
    def frame_dim(self) -> int:
        """Width of the frames the backend sees."""
        return self.spec.inter_dim if self.spec.has_inter else self.backbone.config.hidden_dim

    def context(self, gate_overrides: Optional[Dict[str, float]] = None) -> PetContext:
        return self.pet.context(gate_overrides)

    def hidden_states(self, waveforms, ctx: Optional[PetContext] = None) -> HiddenStack:
        return encode(self.backbone, waveforms, ctx if ctx is not None else self.context())

    def frames(self, stack: HiddenStack, ctx: PetContext) -> Tensor:
        layer_weights = self.layer_weights.tensor if self.layer_weights is not None else None
        return aggregate(stack, self.pet.inter, layer_weights, ctx.inter_gate)

    def embed(self, waveforms, gate_overrides: Optional[Dict[str, float]] = None,
              ctx: Optional[PetContext] = None) -> Tensor:
        """[B, L] -> [B, embed_dim]."""
        ctx = ctx if ctx is not None else self.context(gate_overrides)
        stack = self.hidden_states(waveforms, ctx)
        return self.backend.embed(self.frames(stack, ctx))

    def logits(self, waveforms, gate_overrides: Optional[Dict[str, float]] = None) -> Tensor:
        return self.classifier(self.embed(waveforms, gate_overrides))

    def loss(self, waveforms, labels: Sequence[int],
             gate_overrides: Optional[Dict[str, float]] = None) -> Tensor:
        return F.cross_entropy(self.logits(waveforms, gate_overrides), np.asarray(labels))


def build_model(backbone_config: BackboneConfig, spec: MethodSpec, head_config: Optional[HeadConfig] = None,
                num_speakers: int = 0, rng: Optional[np.random.Generator] = None,
                dtype: str = 'float32') -> SpeakerModel:
    """`rng=None` builds a shape-only model for parameter accounting."""
    return SpeakerModel(backbone_config, spec, head_config, num_speakers, ParamRegistry(rng, dtype))
