"""
Speaker-verification backends and the training classifier.
"""
from typing import List

from petforge.core.errors import InputError
from petforge.engine import tensor as T
from petforge.engine.layers import Affine, Conv1d
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tensor
from .head_config import TDNN_LAYERS, HeadConfig
from .pooling import stats_pool


class LinearBackend:
    """stats pooling -> fc1 -> relu -> fc2; fc2's output is the embedding."""

    def __init__(self, registry: ParamRegistry, in_dim: int, config: HeadConfig):
        self.in_dim = in_dim
        self.embed_dim = config.embed_dim
        self.fc1 = Affine(registry, 'head.backend.fc1', 2 * in_dim, config.embed_dim, 'backend')
        self.fc2 = Affine(registry, 'head.backend.fc2', config.embed_dim, config.embed_dim, 'backend')

    def min_frames(self) -> int:
        return 1

    def embed(self, frames: Tensor) -> Tensor:
        return self.fc2(T.relu(self.fc1(stats_pool(frames))))


class TdnnBackend:
    """x-vector: five dilated frame layers, stats pooling, two affine layers."""

    def __init__(self, registry: ParamRegistry, in_dim: int, config: HeadConfig):
        self.in_dim = in_dim
        self.embed_dim = config.embed_dim
        self.frame_layers: List[Conv1d] = []
        channels = in_dim
        for j, (context, dilation) in enumerate(TDNN_LAYERS, start=1):
            out_channels = config.pool_channels if j == len(TDNN_LAYERS) else config.tdnn_channels
            self.frame_layers.append(Conv1d(registry, f"head.backend.frame{j}", channels, out_channels,
                                            context, 'backend', dilation=dilation))
            channels = out_channels
        self.receptive_field = config.tdnn_receptive_field
        self.fc6 = Affine(registry, 'head.backend.fc6', 2 * channels, config.embed_dim, 'backend')
        self.fc7 = Affine(registry, 'head.backend.fc7', config.embed_dim, config.embed_dim, 'backend')

    def min_frames(self) -> int:
        return self.receptive_field

    def embed(self, frames: Tensor) -> Tensor:
        if frames.shape[-2] < self.receptive_field:
            raise InputError(f"TDNN backend needs at least {self.receptive_field} frames, got {frames.shape[-2]}")
        x = frames
        for layer in self.frame_layers:
            x = T.relu(layer(x))
        return self.fc7(T.relu(self.fc6(stats_pool(x))))


class Classifier:
    """Embedding -> speaker logits; training only."""

    def __init__(self, registry: ParamRegistry, embed_dim: int, num_speakers: int):
        self.num_speakers = num_speakers
        self.affine = Affine(registry, 'head.classifier', embed_dim, num_speakers, 'classifier')

    def __call__(self, embedding: Tensor) -> Tensor:
        return self.affine(embedding)


def build_backend(config: HeadConfig, in_dim: int, registry: ParamRegistry):
    config.validate()
    if config.backend == 'linear':
        return LinearBackend(registry, in_dim, config)
    return TdnnBackend(registry, in_dim, config)
