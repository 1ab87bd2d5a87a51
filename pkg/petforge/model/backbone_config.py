"""
Backbone shape configuration and its presets.
"""
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Tuple

from petforge.core.errors import ConfigurationError

ConvLayer = Tuple[int, int, int]

DESK_CONV = ((10, 5, 32), (8, 4, 32), (4, 2, 32))
FULL_CONV = ((10, 5, 512),) + ((3, 2, 512),) * 4 + ((2, 2, 512),) * 2
TINY_CONV = ((4, 2, 8), (3, 2, 8))


@dataclass(frozen=True)
class BackboneConfig:
    """Frozen encoder shape: strided conv stack, positional conv, N post-LN blocks."""
    num_layers: int = 4
    hidden_dim: int = 64
    num_heads: int = 4
    ffn_dim: int = 256
    conv_spec: Tuple[ConvLayer, ...] = DESK_CONV
    sample_rate: int = 4000
    pos_conv_kernel: int = 16
    pos_conv_groups: int = 4
    activation: str = 'gelu'

    def __post_init__(self):
        object.__setattr__(self, 'conv_spec', tuple(tuple(int(v) for v in layer) for layer in self.conv_spec))

    @classmethod
    def desk(cls) -> 'BackboneConfig':
        return cls()

    @classmethod
    def full(cls) -> 'BackboneConfig':
        return cls(num_layers=12, hidden_dim=768, num_heads=8, ffn_dim=3072, conv_spec=FULL_CONV,
                   sample_rate=16000, pos_conv_kernel=128, pos_conv_groups=16)

    @classmethod
    def tiny(cls) -> 'BackboneConfig':
        return cls(num_layers=2, hidden_dim=16, num_heads=2, ffn_dim=32, conv_spec=TINY_CONV,
                   sample_rate=4000, pos_conv_kernel=4, pos_conv_groups=2)

    @classmethod
    def preset(cls, name: str) -> 'BackboneConfig':
        presets = {'desk': cls.desk, 'full': cls.full, 'tiny': cls.tiny}
        if name not in presets:
            raise ConfigurationError(f"unknown backbone preset '{name}' (expected one of {sorted(presets)})")
        return presets[name]()

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.num_heads

    @property
    def conv_channels(self) -> int:
        return self.conv_spec[-1][2]

    @property
    def receptive_field(self) -> int:
        """Shortest waveform that yields one frame."""
        field_len, jump = 1, 1
        for kernel, stride, _ in self.conv_spec:
            field_len += (kernel - 1) * jump
            jump *= stride
        return field_len

    @property
    def total_stride(self) -> int:
        jump = 1
        for _, stride, _ in self.conv_spec:
            jump *= stride
        return jump

    def num_frames(self, length: int) -> int:
        """Frames after the conv stack; 0 when `length` is below the receptive field."""
        for kernel, stride, _ in self.conv_spec:
            if length < kernel:
                return 0
            length = (length - kernel) // stride + 1
        return length

    def validate(self):
        positive = ('num_layers', 'hidden_dim', 'num_heads', 'ffn_dim', 'sample_rate',
                    'pos_conv_kernel', 'pos_conv_groups')
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigurationError(f"backbone.{name} must be positive, got {getattr(self, name)}")
        if self.hidden_dim % self.num_heads:
            raise ConfigurationError(
                f"backbone.num_heads={self.num_heads} does not divide hidden_dim={self.hidden_dim}")
        if self.hidden_dim % self.pos_conv_groups:
            raise ConfigurationError(
                f"backbone.pos_conv_groups={self.pos_conv_groups} does not divide hidden_dim={self.hidden_dim}")
        if not self.conv_spec:
            raise ConfigurationError("backbone.conv_spec needs at least one layer")
        for layer in self.conv_spec:
            if len(layer) != 3 or min(layer) < 1:
                raise ConfigurationError(f"backbone.conv_spec entry {layer} is not (kernel, stride, channels)")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['conv_spec'] = [list(layer) for layer in self.conv_spec]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BackboneConfig':
        data = dict(data)
        base = cls.preset(data.pop('preset')) if 'preset' in data else cls()
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown backbone keys: {sorted(unknown)}")
        values = base.to_dict()
        values.update(data)
        return cls(**values)
