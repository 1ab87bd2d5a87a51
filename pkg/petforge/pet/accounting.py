"""
Trainable-parameter accounting: registry enumeration and closed forms.
"""
from typing import Optional, Tuple

from petforge.head.head_config import HeadConfig
from petforge.model.backbone_config import BackboneConfig
from petforge.model.speaker_model import build_model
from petforge.utils.logger import log_warning
from .method import HEAD_OWNERS, MethodSpec


def backbone_parameter_count(config: BackboneConfig) -> int:
    """Every `backbone.*` tensor, mask embedding included."""
    d, f, n = config.hidden_dim, config.ffn_dim, config.num_layers
    total = 0
    channels = 1
    for kernel, _, out_channels in config.conv_spec:
        total += kernel * channels * out_channels + out_channels + 2 * out_channels
        channels = out_channels
    total += 2 * channels + channels * d + d                       # feature projection
    total += d                                                     # mask embedding
    total += config.pos_conv_kernel * d * d // config.pos_conv_groups + d
    total += 2 * d                                                 # encoder LN
    total += n * (4 * (d * d + d) + 2 * d * f + f + d + 4 * d)
    return total


def conv_encoder_parameter_count(config: BackboneConfig) -> int:
    total = 0
    channels = 1
    for kernel, _, out_channels in config.conv_spec:
        total += kernel * channels * out_channels + 3 * out_channels
        channels = out_channels
    return total


def _adapter(d: int, bottleneck: int) -> int:
    return 2 * d * bottleneck + bottleneck + d + 2 * d


def analytic_trainable_count(spec: MethodSpec, config: BackboneConfig) -> int:
    """Closed-form PET-side trainable count (head excluded)."""
    d, n = config.hidden_dim, config.num_layers
    if spec.method == 'ft':
        return backbone_parameter_count(config) - conv_encoder_parameter_count(config) - d
    total = 0
    if spec.has_inner:
        total += n * _adapter(d, spec.bottleneck_dim) + (1 if spec.learnable_scale else 0)
    if spec.has_houlsby:
        total += 2 * n * _adapter(d, spec.bottleneck_dim)
    if spec.has_lora:
        total += 2 * n * 2 * d * spec.lora_rank
    if spec.has_inter:
        e = spec.inter_dim
        total += d * e + e + 2 * e + n
    if spec.has_prompt:
        total += spec.num_prompt_layers(n) * spec.prompt_length * d
    if spec.gated:
        gates = (n if spec.deep_prompt else 0) + (n if spec.has_inner else 0) + (1 if spec.has_inter else 0)
        total += gates * (d + 1)
    return total


def count_trainable(spec: MethodSpec, config: BackboneConfig) -> Tuple[int, float]:
    """(trainable count, fraction of the backbone) by enumerating a shape-only registry."""
    model = build_model(config, spec)
    registry = model.registry
    count = sum(p.size for p in registry.parameters(trainable=True) if p.owner not in HEAD_OWNERS)
    backbone_total = registry.count(prefix='backbone.')
    analytic = analytic_trainable_count(spec, config)
    if analytic != count:
        log_warning(f"{spec.method}: enumerated {count} trainables but the closed form gives {analytic}")
    return count, count / backbone_total


def head_parameter_count(spec: MethodSpec, config: BackboneConfig, head: HeadConfig,
                         num_speakers: int = 0) -> int:
    """SV backend (plus layer weights and, when requested, the classifier)."""
    model = build_model(config, spec, head, num_speakers)
    return sum(p.size for p in model.registry.parameters() if p.owner in HEAD_OWNERS)


def trainable_names(spec: MethodSpec, config: BackboneConfig, head: Optional[HeadConfig] = None,
                    num_speakers: int = 0):
    model = build_model(config, spec, head, num_speakers)
    return [p.name for p in model.registry.parameters(trainable=True)]
