"""
The frozen speech encoder: strided conv feature encoder, convolutional
positional embedding and N post-LN Transformer blocks.

Every forward pass works on batches [B, L] of raw waveforms; a rank-1
waveform is treated as a batch of one.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from petforge.config.settings import MASK_FRACTION, TARGET_BANDS
from petforge.core.errors import ContractError, InputError, ShapeError
from petforge.data.features import log_band_energies, standardize
from petforge.data.repositories import CheckpointRepository
from petforge.engine import functional as F
from petforge.engine import tensor as T
from petforge.engine.layers import Affine, Conv1d, LayerNorm
from petforge.engine.params import ParamRegistry, init_normal
from petforge.engine.tensor import Tensor
from petforge.pet.context import PetContext
from petforge.utils.logger import log_info
from .backbone_config import BackboneConfig
from .transformer import TransformerBlock

BACKBONE_PREFIX = 'backbone.'


@dataclass
class HiddenStack:
    """H[0] is the conv output, H[1..N] the speech rows of each block; Z the prompt rows."""
    H: List[Tensor] = field(default_factory=list)
    Z: List[Tensor] = field(default_factory=list)

    @property
    def layers(self) -> List[Tensor]:
        return self.H[1:]

    @property
    def num_layers(self) -> int:
        return len(self.H) - 1

    @property
    def last(self) -> Tensor:
        return self.H[-1]


class FeatureEncoder:
    """conv -> LN -> gelu per layer, then LN + projection to the model width."""

    def __init__(self, registry: ParamRegistry, config: BackboneConfig):
        self.config = config
        self.layers = []
        channels = 1
        for j, (kernel, stride, out_channels) in enumerate(config.conv_spec, start=1):
            conv = Conv1d(registry, f"backbone.feature_encoder.conv{j}", channels, out_channels,
                          kernel, 'backbone', stride=stride)
            norm = LayerNorm(registry, f"backbone.feature_encoder.ln{j}", out_channels, 'backbone')
            self.layers.append((conv, norm))
            channels = out_channels
        self.projection_ln = LayerNorm(registry, 'backbone.feature_projection.ln', channels, 'backbone')
        self.projection = Affine(registry, 'backbone.feature_projection.linear', channels,
                                 config.hidden_dim, 'backbone')

    def __call__(self, waveforms: Tensor) -> Tensor:
        x = waveforms.reshape(waveforms.shape + (1,))
        for conv, norm in self.layers:
            x = T.gelu(norm(conv(x)))
        return self.projection(self.projection_ln(x))


class Backbone:
    def __init__(self, config: BackboneConfig, registry: ParamRegistry):
        config.validate()
        d = config.hidden_dim
        self.config = config
        self.registry = registry
        self.feature_encoder = FeatureEncoder(registry, config)
        self.mask_embedding = registry.declare('backbone.mask_embedding', (d,), 'backbone', 'fan_in_uniform')

        fan_in = config.pos_conv_kernel * d // config.pos_conv_groups
        self.pos_conv_weight = registry.declare(
            'backbone.pos_conv.weight',
            (config.pos_conv_groups, fan_in, d // config.pos_conv_groups),
            'backbone', init_normal(math.sqrt(1.0 / fan_in)))
        self.pos_conv_bias = registry.declare('backbone.pos_conv.bias', (d,), 'backbone', 'zeros')
        self.encoder_ln = LayerNorm(registry, 'backbone.encoder_ln', d, 'backbone')

        self.blocks = [TransformerBlock(registry, i, config) for i in range(1, config.num_layers + 1)]

    @property
    def num_layers(self) -> int:
        return self.config.num_layers

    def as_batch(self, waveform) -> Tensor:
        """Validated [B, L] view of a waveform or a batch of them."""
        waveform = T.as_tensor(waveform)
        if waveform.ndim == 1:
            waveform = waveform.reshape(1, -1)
        if waveform.ndim != 2:
            raise ShapeError(f"waveforms must be [L] or [B, L], got {waveform.shape}", name='waveform')
        if waveform.shape[0] == 0:
            raise InputError("empty batch of waveforms")
        minimum = self.config.receptive_field
        if waveform.shape[1] < minimum:
            raise InputError(f"waveform of {waveform.shape[1]} samples is shorter than the "
                             f"minimum length {minimum}")
        return waveform

    def feature_frames(self, waveform) -> Tensor:
        """Projected conv features [B, T, d], before positional context."""
        return self.feature_encoder(self.as_batch(waveform))

    def contextualize(self, features: Tensor) -> Tensor:
        """H_0 = LN(x + gelu(grouped_conv(x)))."""
        pos = F.grouped_conv_same(features, self.pos_conv_weight.tensor, self.pos_conv_bias.tensor,
                                  self.config.pos_conv_kernel, self.config.pos_conv_groups)
        return self.encoder_ln(features + T.gelu(pos))


def conv_encode(backbone: Backbone, waveform) -> Tensor:
    """H_0 for [L] -> [T, d] or [B, L] -> [B, T, d]."""
    single = T.as_tensor(waveform).ndim == 1
    h0 = backbone.contextualize(backbone.feature_frames(waveform))
    return h0.reshape(h0.shape[1:]) if single else h0


def block_forward(block: TransformerBlock, x: Tensor, index: int,
                  pet_ctx: Optional[PetContext] = None):
    """Run block `index` on [B, m + T, d]; returns (Z_i, H_i) split at the prompt rows."""
    if block.index != index:
        raise ContractError(f"block {block.index} called as layer {index}")
    if x.shape[-1] != block.dim:
        raise ShapeError(f"block {index} expects width {block.dim}, got {x.shape}",
                         name=f"backbone.block{index}")
    layer = pet_ctx.layer(index) if pet_ctx is not None else None
    rows = layer.prompt_rows if layer is not None else 0
    if x.shape[1] <= rows:
        raise InputError(f"block {index} input of {x.shape[1]} rows leaves no speech frames after {rows} prompts")
    out = block(x, layer)
    return out[:, :rows], out[:, rows:]


def encode(backbone: Backbone, waveform, pet_ctx: Optional[PetContext] = None) -> HiddenStack:
    """All hidden states of a batch, with prompts prepended per layer when active."""
    if pet_ctx is not None and pet_ctx.num_layers != backbone.num_layers:
        raise ContractError(f"PET context has {pet_ctx.num_layers} layers, backbone {backbone.num_layers}")
    stack = HiddenStack(H=[backbone.contextualize(backbone.feature_frames(waveform))])
    previous_prompt = None
    for index, block in enumerate(backbone.blocks, start=1):
        speech = stack.H[-1]
        prompt = pet_ctx.prompt_input(index, speech, previous_prompt) if pet_ctx is not None else None
        x = T.concat([prompt, speech], axis=1) if prompt is not None else speech
        z, h = block_forward(block, x, index, pet_ctx)
        stack.H.append(h)
        if prompt is not None:
            stack.Z.append(z)
            previous_prompt = z
    return stack


# ---------------------------------------------------------------------------
# pseudo-pretraining

class PretrainHead:
    """Frame-wise regression of spectral targets; never saved with the backbone."""

    def __init__(self, registry: ParamRegistry, config: BackboneConfig, num_bands: int = TARGET_BANDS):
        self.num_bands = num_bands
        self.proj = Affine(registry, 'pretrain.head.proj', config.hidden_dim, num_bands, 'pretrain')

    def __call__(self, hidden: Tensor) -> Tensor:
        return self.proj(hidden)


def spectral_targets(config: BackboneConfig, waveforms: np.ndarray, num_frames: int,
                     num_bands: int) -> np.ndarray:
    """Standardized log band energies on the conv frame grid: [B, T, bands]."""
    feats = np.stack([log_band_energies(w, config.receptive_field, config.total_stride, num_bands, num_frames)
                      for w in waveforms])
    return standardize(feats)


def mask_span(num_frames: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """One contiguous span of round(fraction * T) frames, start drawn from `rng`."""
    span = min(num_frames, int(round(fraction * num_frames)))
    mask = np.zeros(num_frames, dtype=bool)
    if span > 0:
        start = int(rng.integers(0, num_frames - span + 1))
        mask[start:start + span] = True
    return mask


def masked_prediction_loss(backbone: Backbone, head: PretrainHead, waveforms,
                           rng: np.random.Generator, mask_fraction: float = MASK_FRACTION) -> Tensor:
    """Mean squared error of the predicted spectral targets over masked frames."""
    waveforms = T.as_tensor(waveforms)
    if waveforms.ndim != 2 or waveforms.shape[0] == 0:
        raise InputError(f"pretraining needs a non-empty batch [B, L], got {waveforms.shape}")
    features = backbone.feature_frames(waveforms)
    batch, frames, _ = features.shape
    mask = mask_span(frames, mask_fraction, rng)
    if not mask.any():
        return Tensor(0.0, dtype=features.dtype)

    keep = T.as_tensor((~mask).astype(features.dtype)[None, :, None], like=features)
    masked = T.as_tensor(mask.astype(features.dtype)[None, :, None], like=features)
    x = features * keep + backbone.mask_embedding.tensor * masked

    hidden = backbone.contextualize(x)
    for index, block in enumerate(backbone.blocks, start=1):
        _, hidden = block_forward(block, hidden, index)

    targets = spectral_targets(backbone.config, waveforms.data, frames, head.num_bands)
    error = head(hidden[:, np.flatnonzero(mask), :]) - T.as_tensor(targets[:, mask, :], like=features)
    return (error * error).mean()


# ---------------------------------------------------------------------------
# weights

def save_weights(backbone: Backbone, path: str):
    arrays = backbone.registry.state_arrays(prefix=BACKBONE_PREFIX)
    CheckpointRepository.save_weights(arrays, path)
    log_info(f"Saved {len(arrays)} backbone tensors to {path}")


def load_weights(backbone: Backbone, path: str):
    """Bit-exact restore; a missing tensor or a shape mismatch raises ShapeError naming it."""
    arrays = CheckpointRepository.load_weights(path)
    backbone.registry.load_arrays(
        {name: value for name, value in arrays.items() if name.startswith(BACKBONE_PREFIX)},
        strict=True, prefix=BACKBONE_PREFIX)
    log_info(f"Loaded backbone weights from {path}")
