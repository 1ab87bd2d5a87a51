"""
Method specification: which tuning strategy is active and its hyperparameters.
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Union

from petforge.config import settings
from petforge.core.errors import ConfigurationError

METHODS = (
    'ft', 'backend_only', 'weighted_sum', 'houlsby', 'lora',
    'inner', 'inter', 'inner_inter', 'prompt', 'prompt_shallow',
    'unipet', 'unipet_nogate',
)

INNER_METHODS = {'inner', 'inner_inter', 'unipet', 'unipet_nogate'}
INTER_METHODS = {'inter', 'inner_inter', 'unipet', 'unipet_nogate'}
PROMPT_METHODS = {'prompt', 'prompt_shallow', 'unipet', 'unipet_nogate'}
ADAPTER_MODES = ('parallel', 'sequential')

# owners in learning-rate group A; everything else trainable is group B
GROUP_A_OWNERS = {'backend', 'classifier', 'prompt'}
# owners that belong to the speaker-verification head rather than the PET side
HEAD_OWNERS = {'backend', 'classifier', 'aggregate'}


@dataclass(frozen=True)
class MethodSpec:
    """Exactly one tuning strategy per run."""
    method: str = 'unipet'
    bottleneck_dim: int = settings.BOTTLENECK_DIM
    scale: Union[float, str] = settings.ADAPTER_SCALE
    adapter_mode: str = 'parallel'
    prompt_length: int = settings.PROMPT_LENGTH
    lora_rank: int = settings.LORA_RANK
    lora_alpha: Optional[float] = None
    inter_dim: int = settings.INTER_DIM

    @property
    def has_inner(self) -> bool:
        return self.method in INNER_METHODS

    @property
    def has_inter(self) -> bool:
        return self.method in INTER_METHODS

    @property
    def has_prompt(self) -> bool:
        return self.method in PROMPT_METHODS

    @property
    def deep_prompt(self) -> bool:
        return self.has_prompt and self.method != 'prompt_shallow'

    @property
    def has_houlsby(self) -> bool:
        return self.method == 'houlsby'

    @property
    def has_lora(self) -> bool:
        return self.method == 'lora'

    @property
    def gated(self) -> bool:
        return self.method == 'unipet'

    @property
    def uses_layer_weights(self) -> bool:
        """Plain softmax-weighted sum in the head (inter methods carry their own weights)."""
        return self.method not in ('backend_only',) and not self.has_inter

    @property
    def backbone_trainable(self) -> bool:
        return self.method == 'ft'

    @property
    def learnable_scale(self) -> bool:
        return self.scale == 'learnable'

    @property
    def lora_scaling(self) -> float:
        alpha = self.lora_rank if self.lora_alpha is None else self.lora_alpha
        return float(alpha) / float(self.lora_rank)

    def num_prompt_layers(self, num_layers: int) -> int:
        if not self.has_prompt:
            return 0
        return num_layers if self.deep_prompt else 1

    def is_trainable(self, name: str, owner: str) -> bool:
        """Freezing policy: backbone only under full fine-tuning, never the conv encoder."""
        if owner == 'pretrain':
            return False
        if owner == 'backbone':
            if not self.backbone_trainable:
                return False
            return not (name.startswith('backbone.feature_encoder.') or name == 'backbone.mask_embedding')
        return True

    def lr_group(self, owner: str) -> str:
        return 'A' if owner in GROUP_A_OWNERS else 'B'

    def validate(self, hidden_dim: int):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method '{self.method}' (expected one of {list(METHODS)})")
        if self.adapter_mode not in ADAPTER_MODES:
            raise ConfigurationError(f"adapter_mode must be one of {ADAPTER_MODES}, got '{self.adapter_mode}'")
        if isinstance(self.scale, str):
            if self.scale != 'learnable':
                raise ConfigurationError(f"scale must be a non-negative number or 'learnable', got '{self.scale}'")
        elif self.scale < 0:
            raise ConfigurationError(f"scale must be non-negative, got {self.scale}")
        if (self.has_inner or self.has_houlsby) and not 0 < self.bottleneck_dim < hidden_dim:
            raise ConfigurationError(
                f"bottleneck_dim={self.bottleneck_dim} must lie in (0, {hidden_dim})")
        if self.has_prompt and self.prompt_length < 1:
            raise ConfigurationError(f"prompt_length must be positive, got {self.prompt_length}")
        if self.has_lora and not 0 < self.lora_rank < hidden_dim:
            raise ConfigurationError(f"lora_rank={self.lora_rank} must lie in (0, {hidden_dim})")
        if self.has_inter and self.inter_dim < 1:
            raise ConfigurationError(f"inter_dim must be positive, got {self.inter_dim}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MethodSpec':
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown method keys: {sorted(unknown)}")
        return cls(**data)
