"""
Training Manager - cross-entropy training of the trainable set prescribed by the MethodSpec.
"""
import math
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from petforge.core.errors import NumericAbortError
from petforge.data.repositories import CheckpointRepository, CheckpointState
from petforge.data.serializers import CSVSerializer
from petforge.engine.tensor import Tape, backward
from petforge.model.backbone import load_weights
from petforge.model.speaker_model import SpeakerModel, build_model
from petforge.utils.logger import log_debug, log_info, log_run_event, log_warning
from petforge.utils.performance import time_operation
from .optimizer import AdamOptimizer, Schedule
from .pretrain_manager import sample_ids

TRAIN_LOG = 'train_log.csv'
CHECKPOINT = 'checkpoint.petw'
LOG_HEADER = ('step', 'loss', 'lr_groupA', 'lr_groupB')


@dataclass
class TrainingResult:
    checkpoint_path: str
    log_path: str
    start_step: int = 0
    losses: List[float] = field(default_factory=list)

    @property
    def final_step(self) -> int:
        return self.start_step + len(self.losses)


class TrainingManager:
    """Builds the speaker model for the lab config and trains it."""

    def __init__(self, lab):
        self.lab = lab

    def num_speakers(self) -> int:
        return len(self.lab.data_manager.train_manifest().speakers())

    def build_model(self, num_speakers: Optional[int] = None) -> SpeakerModel:
        """Model seeded from the run seed; pretrained backbone weights replace the random ones."""
        config = self.lab.config
        num_speakers = self.num_speakers() if num_speakers is None else num_speakers
        model = build_model(config.backbone, config.method, config.head, num_speakers,
                            np.random.default_rng(config.seed), config.dtype)
        if config.backbone_weights:
            load_weights(model.backbone, config.backbone_weights)
        else:
            log_warning("No backbone_weights configured; training on a randomly initialized backbone")
        return model

    def schedules(self):
        config = self.lab.config
        opt = config.optimizer
        warmup = config.resolved_warmup_steps
        return {
            'A': Schedule(opt.lr_group_a, opt.floor_group_a, warmup, config.total_steps),
            'B': Schedule(opt.lr_group_b, opt.floor_group_b, warmup, config.total_steps),
        }

    def make_optimizer(self, model: SpeakerModel) -> AdamOptimizer:
        opt = self.lab.config.optimizer
        return AdamOptimizer(model.registry, model.spec, self.schedules(), opt.beta1, opt.beta2, opt.eps)

    def save_checkpoint(self, model: SpeakerModel, optimizer: AdamOptimizer, path: str):
        first, second, step = optimizer.state()
        CheckpointRepository.save(CheckpointState(model.registry.state_arrays(), first, second, step), path)
        log_debug(f"Checkpoint at step {step} written to {path}")

    def load_checkpoint(self, model: SpeakerModel, optimizer: AdamOptimizer, path: str) -> int:
        state = CheckpointRepository.load(path)
        model.registry.load_arrays(state.params, strict=True)
        optimizer.load_state(state.first_moments, state.second_moments, state.step)
        return state.step

    def train_step(self, model: SpeakerModel, optimizer: AdamOptimizer, step: int):
        """One seeded batch, forward, backward and update; returns (loss, group rates)."""
        config = self.lab.config
        data = self.lab.data_manager
        rng = np.random.default_rng([config.seed, step])
        ids = sample_ids(data.train_manifest().ids(), config.batch_size, rng)
        batch = data.training_batch(ids, config.data.crop_samples, rng, np.dtype(config.dtype))

        with Tape() as tape:
            model.registry.watch(tape)
            try:
                loss = model.loss(batch.waveforms, batch.labels)
            finally:
                model.registry.release()
        value = loss.item()
        if not math.isfinite(value):
            raise NumericAbortError(f"training loss became {value} ({config.method.method})", step=step)
        grads = backward(loss, tape)
        rates = optimizer.step({name: g.data for name, g in grads.items()})
        return value, rates

    def train(self, resume_from: Optional[str] = None, stop_at: Optional[int] = None) -> TrainingResult:
        """Train up to `stop_at` (default total_steps), optionally resuming a checkpoint."""
        config = self.lab.config
        end = config.total_steps if stop_at is None else min(stop_at, config.total_steps)
        checkpoint_path = self.lab.path(CHECKPOINT)
        log_path = self.lab.path(TRAIN_LOG)

        model = self.build_model()
        optimizer = self.make_optimizer(model)
        start = 0
        if resume_from:
            start = self.load_checkpoint(model, optimizer, resume_from)
            CSVSerializer.truncate_after(log_path, 'step', start - 1)
            log_info(f"Resuming {config.method.method} from step {start}")
        elif os.path.exists(log_path):
            os.remove(log_path)

        trainable = model.registry.count(trainable=True)
        log_run_event("training_started", {
            "method": config.method.method, "trainable": trainable,
            "start_step": start, "end_step": end, "seed": config.seed,
        })

        result = TrainingResult(checkpoint_path, log_path, start_step=start)
        for step in range(start, end):
            with time_operation("train_step"):
                value, rates = self.train_step(model, optimizer, step)
            result.losses.append(value)
            CSVSerializer.append_rows(log_path, LOG_HEADER,
                                      [(step, repr(value), repr(rates['A']), repr(rates['B']))])
            if (step + 1) % config.checkpoint_every == 0 and step + 1 < end:
                self.save_checkpoint(model, optimizer, checkpoint_path)

        self.save_checkpoint(model, optimizer, checkpoint_path)
        log_run_event("training_finished", {
            "method": config.method.method,
            "initial_loss": result.losses[0] if result.losses else None,
            "final_loss": result.losses[-1] if result.losses else None,
        })
        return result
