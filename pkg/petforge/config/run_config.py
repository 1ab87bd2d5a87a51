"""
Run configuration - one JSON document describing a complete experiment.
"""
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional, Type

from petforge.config import settings
from petforge.core.errors import ConfigurationError
from petforge.head.head_config import HeadConfig
from petforge.model.backbone_config import BackboneConfig
from petforge.pet.method import MethodSpec


def _from_flat(cls: Type, section: str, data: Dict[str, Any]):
    if not isinstance(data, dict):
        raise ConfigurationError(f"section '{section}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown {section} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigurationError(f"invalid {section} section: {e}") from e


def desk_method() -> MethodSpec:
    """Method hyperparameters scaled to the desk backbone (d=64)."""
    return MethodSpec(method='unipet', bottleneck_dim=32, prompt_length=10, lora_rank=8, inter_dim=64)


def desk_head() -> HeadConfig:
    return HeadConfig(backend='tdnn', embed_dim=128, tdnn_channels=128, pool_channels=384)


@dataclass(frozen=True)
class DataConfig:
    corpus_dir: str = 'corpus'
    seed: int = 1234
    num_train_speakers: int = settings.TRAIN_SPEAKERS
    num_eval_speakers: int = settings.EVAL_SPEAKERS
    utts_per_speaker: int = settings.UTTS_PER_SPEAKER
    sample_rate: int = settings.SAMPLE_RATE
    num_harmonics: int = settings.NUM_HARMONICS
    snr_db: float = settings.SNR_DB
    min_duration: float = settings.MIN_DURATION
    max_duration: float = settings.MAX_DURATION
    crop_seconds: float = 1.0
    num_target_trials: int = 300
    num_nontarget_trials: int = 300

    @property
    def crop_samples(self) -> int:
        return int(round(self.crop_seconds * self.sample_rate))


@dataclass(frozen=True)
class OptimizerConfig:
    lr_group_a: float = settings.LR_GROUP_A_PEAK
    floor_group_a: float = settings.LR_GROUP_A_FLOOR
    lr_group_b: float = settings.LR_GROUP_B_PEAK
    floor_group_b: float = settings.LR_GROUP_B_FLOOR
    beta1: float = settings.ADAM_BETA1
    beta2: float = settings.ADAM_BETA2
    eps: float = settings.ADAM_EPS
    warmup_fraction: float = settings.WARMUP_FRACTION


@dataclass(frozen=True)
class PretrainConfig:
    steps: int = 200
    learning_rate: float = 1e-3
    warmup_steps: int = 20
    mask_fraction: float = settings.MASK_FRACTION
    target_bands: int = settings.TARGET_BANDS
    batch_size: int = 8


@dataclass(frozen=True)
class RunConfig:
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    method: MethodSpec = field(default_factory=desk_method)
    head: HeadConfig = field(default_factory=desk_head)
    data: DataConfig = field(default_factory=DataConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    total_steps: int = 300
    warmup_steps: Optional[int] = None
    batch_size: int = 16
    seed: int = 0
    output_dir: str = 'runs/default'
    backbone_weights: Optional[str] = None
    dtype: str = 'float32'
    checkpoint_every: int = 100
    eval_crop_seconds: Optional[float] = None

    @property
    def resolved_warmup_steps(self) -> int:
        if self.warmup_steps is not None:
            return self.warmup_steps
        return int(round(self.optimizer.warmup_fraction * self.total_steps))

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> 'RunConfig':
        changes = {}
        if seed is not None:
            changes['seed'] = seed
        if output_dir is not None:
            changes['output_dir'] = output_dir
        return replace(self, **changes) if changes else self

    def validate(self) -> 'RunConfig':
        """Pre-flight checks; raises ConfigurationError on the first problem."""
        self.backbone.validate()
        self.method.validate(self.backbone.hidden_dim)
        self.head.validate()
        if self.dtype not in settings.DTYPE_CODES:
            raise ConfigurationError(f"dtype must be one of {sorted(settings.DTYPE_CODES)}, got '{self.dtype}'")
        if self.total_steps < 0 or self.batch_size < 1 or self.checkpoint_every < 1:
            raise ConfigurationError("total_steps must be >= 0, batch_size and checkpoint_every >= 1")
        warmup = self.resolved_warmup_steps
        if warmup < 0 or warmup > self.total_steps:
            raise ConfigurationError(f"warmup_steps={warmup} must lie in [0, total_steps={self.total_steps}]")
        opt = self.optimizer
        for group in ('a', 'b'):
            peak, floor = getattr(opt, f'lr_group_{group}'), getattr(opt, f'floor_group_{group}')
            if peak < 0 or floor < 0 or floor > peak:
                raise ConfigurationError(f"group {group.upper()} needs 0 <= floor <= peak, got {floor} / {peak}")
        if not (0 <= opt.beta1 < 1 and 0 <= opt.beta2 < 1 and opt.eps > 0):
            raise ConfigurationError("Adam betas must lie in [0, 1) and eps must be positive")
        data = self.data
        if data.num_train_speakers < 2 or data.num_eval_speakers < 2:
            raise ConfigurationError("the corpus needs at least 2 train and 2 eval speakers")
        if not 0 < data.min_duration <= data.max_duration:
            raise ConfigurationError("durations need 0 < min_duration <= max_duration")
        if data.sample_rate != self.backbone.sample_rate:
            raise ConfigurationError(
                f"data.sample_rate={data.sample_rate} differs from backbone.sample_rate={self.backbone.sample_rate}")
        if self.backbone.num_frames(data.crop_samples) < 1:
            raise ConfigurationError(
                f"training crops of {data.crop_samples} samples are below the receptive field "
                f"{self.backbone.receptive_field}")
        if not 0 <= self.pretrain.mask_fraction < 1:
            raise ConfigurationError("pretrain.mask_fraction must lie in [0, 1)")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            'backbone': self.backbone.to_dict(),
            'method': self.method.to_dict(),
            'head': self.head.to_dict(),
            'data': asdict(self.data),
            'optimizer': asdict(self.optimizer),
            'pretrain': asdict(self.pretrain),
            'total_steps': self.total_steps,
            'warmup_steps': self.warmup_steps,
            'batch_size': self.batch_size,
            'seed': self.seed,
            'output_dir': self.output_dir,
            'backbone_weights': self.backbone_weights,
            'dtype': self.dtype,
            'checkpoint_every': self.checkpoint_every,
            'eval_crop_seconds': self.eval_crop_seconds,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        if not isinstance(data, dict):
            raise ConfigurationError("run config must be a JSON object")
        data = dict(data)
        sections = {
            'backbone': lambda d: BackboneConfig.from_dict(d),
            'method': lambda d: MethodSpec.from_dict({**desk_method().to_dict(), **d}),
            'head': lambda d: HeadConfig.from_dict({**desk_head().to_dict(), **d}),
            'data': lambda d: _from_flat(DataConfig, 'data', d),
            'optimizer': lambda d: _from_flat(OptimizerConfig, 'optimizer', d),
            'pretrain': lambda d: _from_flat(PretrainConfig, 'pretrain', d),
        }
        values = {}
        for name, build in sections.items():
            if name in data:
                section = data.pop(name)
                if not isinstance(section, dict):
                    raise ConfigurationError(f"section '{name}' must be an object")
                try:
                    values[name] = build(section)
                except TypeError as e:
                    raise ConfigurationError(f"invalid {name} section: {e}") from e
        top = {f.name for f in fields(cls)} - set(sections)
        unknown = set(data) - top
        if unknown:
            raise ConfigurationError(f"unknown run config keys: {sorted(unknown)}")
        values.update(data)
        return cls(**values)

    @classmethod
    def preset(cls, name: str) -> 'RunConfig':
        """Named starting points: desk (default), tiny (gradient suites), full (accounting only)."""
        if name == 'desk':
            return cls()
        if name == 'tiny':
            return cls(
                backbone=BackboneConfig.tiny(),
                method=MethodSpec(method='unipet', bottleneck_dim=4, prompt_length=2, lora_rank=4, inter_dim=8),
                head=HeadConfig(backend='linear', embed_dim=8, tdnn_channels=8, pool_channels=8),
                data=DataConfig(num_train_speakers=3, num_eval_speakers=2, utts_per_speaker=4,
                                min_duration=0.009, max_duration=0.012, crop_seconds=0.009,
                                num_target_trials=4, num_nontarget_trials=4),
                pretrain=PretrainConfig(steps=20, warmup_steps=2, batch_size=2, target_bands=4),
                total_steps=20, batch_size=2, checkpoint_every=10, dtype='float64',
            )
        if name == 'full':
            return cls(backbone=BackboneConfig.full(), method=MethodSpec(), head=HeadConfig.full(),
                       data=DataConfig(sample_rate=16000))
        raise ConfigurationError(f"unknown run preset '{name}' (expected desk, tiny or full)")
