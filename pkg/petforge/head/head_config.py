"""
Speaker-verification head configuration.
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict

from petforge.config import settings
from petforge.core.errors import ConfigurationError

BACKENDS = ('linear', 'tdnn')

# x-vector frame layers: (context, dilation)
TDNN_LAYERS = ((5, 1), (3, 2), (3, 3), (1, 1), (1, 1))


@dataclass(frozen=True)
class HeadConfig:
    backend: str = 'tdnn'
    embed_dim: int = settings.EMBED_DIM
    tdnn_channels: int = 128
    pool_channels: int = 384

    @classmethod
    def full(cls) -> 'HeadConfig':
        return cls(backend='tdnn', embed_dim=512, tdnn_channels=512, pool_channels=1500)

    @property
    def tdnn_receptive_field(self) -> int:
        return 1 + sum((context - 1) * dilation for context, dilation in TDNN_LAYERS)

    def validate(self):
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"head.backend must be one of {BACKENDS}, got '{self.backend}'")
        for name in ('embed_dim', 'tdnn_channels', 'pool_channels'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"head.{name} must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'HeadConfig':
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown head keys: {sorted(unknown)}")
        return cls(**data)
