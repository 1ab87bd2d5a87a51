"""
Checkpoint repository - parameters, optimizer moments and the step counter in one PETW file.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from petforge.config.settings import OPTIM_PREFIX, STEP_KEY
from petforge.core.errors import FormatError
from ..serializers import PetwSerializer


@dataclass
class CheckpointState:
    params: Dict[str, np.ndarray] = field(default_factory=dict)
    first_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


class CheckpointRepository:
    """Reserved names: `__optim__.m.<param>`, `__optim__.v.<param>`, `__meta__.step`."""

    @staticmethod
    def save(state: CheckpointState, path: str):
        tensors: Dict[str, np.ndarray] = dict(state.params)
        for name, value in state.first_moments.items():
            tensors[f"{OPTIM_PREFIX}m.{name}"] = value
        for name, value in state.second_moments.items():
            tensors[f"{OPTIM_PREFIX}v.{name}"] = value
        tensors[STEP_KEY] = np.array([state.step], dtype=np.float64)
        PetwSerializer.save_to_file(tensors, path)

    @staticmethod
    def load(path: str) -> CheckpointState:
        tensors = PetwSerializer.load_from_file(path)
        if STEP_KEY not in tensors:
            raise FormatError(f"{path} is not a checkpoint (no {STEP_KEY})")
        state = CheckpointState(step=int(tensors.pop(STEP_KEY)[0]))
        for name, value in tensors.items():
            if name.startswith(f"{OPTIM_PREFIX}m."):
                state.first_moments[name[len(OPTIM_PREFIX) + 2:]] = value
            elif name.startswith(f"{OPTIM_PREFIX}v."):
                state.second_moments[name[len(OPTIM_PREFIX) + 2:]] = value
            else:
                state.params[name] = value
        return state

    @staticmethod
    def save_weights(arrays: Dict[str, np.ndarray], path: str):
        PetwSerializer.save_to_file(arrays, path)

    @staticmethod
    def load_weights(path: str) -> Dict[str, np.ndarray]:
        return PetwSerializer.load_from_file(path)
