"""
Pretrain Manager - gives the desk-scale backbone non-degenerate features
through masked spectral prediction before it is frozen.
"""
import math
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from petforge.core.errors import NumericAbortError
from petforge.data.serializers import CSVSerializer
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tape, backward
from petforge.model.backbone import Backbone, PretrainHead, masked_prediction_loss, save_weights
from petforge.pet.method import MethodSpec
from petforge.utils.logger import log_info, log_run_event
from petforge.utils.performance import time_operation
from .optimizer import AdamOptimizer, Schedule

PRETRAIN_LOG = 'pretrain_log.csv'
PRETRAIN_WEIGHTS = 'backbone.petw'
PRETRAIN_HEADER = ('step', 'loss', 'lr')


@dataclass
class PretrainResult:
    weights_path: str
    log_path: str
    losses: List[float] = field(default_factory=list)


def sample_ids(utt_ids: List[str], batch_size: int, rng: np.random.Generator) -> List[str]:
    """Distinct utterances when the pool allows it, with replacement otherwise."""
    replace = batch_size > len(utt_ids)
    picks = rng.choice(len(utt_ids), size=batch_size, replace=replace)
    return [utt_ids[int(i)] for i in picks]


class PretrainManager:
    """Runs pseudo-pretraining for the lab's backbone configuration."""

    def __init__(self, lab):
        self.lab = lab

    def build(self, rng: np.random.Generator):
        config = self.lab.config
        registry = ParamRegistry(rng, config.dtype)
        backbone = Backbone(config.backbone, registry)
        head = PretrainHead(registry, config.backbone, config.pretrain.target_bands)
        registry.set_trainable(lambda p: True)
        return backbone, head

    def pretrain(self, weights_path: Optional[str] = None) -> PretrainResult:
        config = self.lab.config
        pre = config.pretrain
        weights_path = weights_path or self.lab.path(PRETRAIN_WEIGHTS)
        log_path = self.lab.path(PRETRAIN_LOG)
        if os.path.exists(log_path):
            os.remove(log_path)

        backbone, head = self.build(np.random.default_rng(config.seed))
        registry = backbone.registry
        schedule = Schedule(pre.learning_rate, 0.0, min(pre.warmup_steps, pre.steps), pre.steps)
        optimizer = AdamOptimizer(registry, MethodSpec(method='ft'), {'A': schedule, 'B': schedule},
                                  config.optimizer.beta1, config.optimizer.beta2, config.optimizer.eps)
        utt_ids = self.lab.data_manager.train_manifest().ids()
        crop_len = config.data.crop_samples
        dtype = np.dtype(config.dtype)

        log_info(f"Pseudo-pretraining backbone for {pre.steps} steps")
        log_run_event("pretrain_started", {"steps": pre.steps, "params": registry.count()})
        result = PretrainResult(weights_path, log_path)
        for step in range(pre.steps):
            rng = np.random.default_rng([config.seed, step])
            batch = self.lab.data_manager.training_batch(
                sample_ids(utt_ids, pre.batch_size, rng), crop_len, rng, dtype)
            with time_operation("pretrain_step"):
                with Tape() as tape:
                    registry.watch(tape)
                    try:
                        loss = masked_prediction_loss(backbone, head, batch.waveforms, rng, pre.mask_fraction)
                    finally:
                        registry.release()
                grads = backward(loss, tape)
                value = loss.item()
                if not math.isfinite(value):
                    raise NumericAbortError(f"pretraining loss became {value}", step=step)
                rates = optimizer.step({name: g.data for name, g in grads.items()})
            result.losses.append(value)
            CSVSerializer.append_rows(log_path, PRETRAIN_HEADER, [(step, repr(value), repr(rates['B']))])

        save_weights(backbone, weights_path)
        log_run_event("pretrain_finished", {
            "initial_loss": result.losses[0] if result.losses else None,
            "final_loss": result.losses[-1] if result.losses else None,
        })
        return result
