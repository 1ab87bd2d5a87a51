"""
Two-group Adam with linear warm-up and linear decay to a floor.
"""
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

from petforge.config import settings
from petforge.core.errors import ConfigurationError, ContractError
from petforge.engine.params import ParamRegistry
from petforge.pet.method import MethodSpec

Arrays = Dict[str, np.ndarray]
GROUPS = ('A', 'B')


@dataclass(frozen=True)
class Schedule:
    """peak * (t + 1) / W during warm-up, then linear from peak to floor at total_steps."""
    peak: float
    floor: float
    warmup_steps: int
    total_steps: int

    def __post_init__(self):
        if self.warmup_steps < 0 or self.total_steps < 0:
            raise ConfigurationError("schedule steps must be non-negative")
        if not 0 <= self.floor <= self.peak:
            raise ConfigurationError(f"schedule needs 0 <= floor <= peak, got {self.floor} / {self.peak}")

    def rate(self, step: int) -> float:
        if step < self.warmup_steps:
            return self.peak * (step + 1) / self.warmup_steps
        span = self.total_steps - self.warmup_steps
        progress = 1.0 if span <= 0 else min(1.0, (step - self.warmup_steps) / span)
        return max(self.floor, self.peak + (self.floor - self.peak) * progress)


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
              moments: Tuple[Mapping[str, np.ndarray], Mapping[str, np.ndarray]],
              rates: Mapping[str, float], step: int,
              beta1: float = settings.ADAM_BETA1, beta2: float = settings.ADAM_BETA2,
              eps: float = settings.ADAM_EPS) -> Tuple[Arrays, Arrays, Arrays]:
    """One bias-corrected Adam update; `step` counts completed updates.

    Returns fresh (params, first moments, second moments); inputs are left untouched.
    """
    if set(grads) != set(params):
        missing = sorted(set(params) - set(grads))
        extra = sorted(set(grads) - set(params))
        raise ContractError(f"gradients must cover exactly the trainable set (missing {missing}, extra {extra})")
    first, second = moments
    t = step + 1
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    new_params, new_first, new_second = {}, {}, {}
    for name, value in params.items():
        grad = np.asarray(grads[name])
        if grad.shape != value.shape:
            raise ContractError(f"gradient for '{name}' has shape {grad.shape}, parameter {value.shape}")
        grad = grad.astype(value.dtype, copy=False)
        m = first.get(name)
        v = second.get(name)
        m = np.zeros_like(value) if m is None else m
        v = np.zeros_like(value) if v is None else v
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        update = rates[name] * (m / correction1) / (np.sqrt(v / correction2) + eps)
        new_params[name] = (value - update).astype(value.dtype, copy=False)
        new_first[name] = m.astype(value.dtype, copy=False)
        new_second[name] = v.astype(value.dtype, copy=False)
    return new_params, new_first, new_second


class AdamOptimizer:
    """Adam over the trainable parameters of a registry, one schedule per LR group."""

    def __init__(self, registry: ParamRegistry, spec: MethodSpec, schedules: Mapping[str, Schedule],
                 beta1: float = settings.ADAM_BETA1, beta2: float = settings.ADAM_BETA2,
                 eps: float = settings.ADAM_EPS):
        missing = set(GROUPS) - set(schedules)
        if missing:
            raise ConfigurationError(f"missing schedules for groups {sorted(missing)}")
        self.registry = registry
        self.spec = spec
        self.schedules = dict(schedules)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.params = registry.parameters(trainable=True)
        self.groups = {p.name: spec.lr_group(p.owner) for p in self.params}
        self.first: Arrays = {}
        self.second: Arrays = {}
        self.step_count = 0

    def rates(self, step: int = None) -> Dict[str, float]:
        step = self.step_count if step is None else step
        return {group: self.schedules[group].rate(step) for group in GROUPS}

    def step(self, grads: Mapping[str, np.ndarray]) -> Dict[str, float]:
        """Apply one update; returns the group rates that were used."""
        group_rates = self.rates()
        values = {p.name: p.value for p in self.params}
        per_param = {name: group_rates[group] for name, group in self.groups.items()}
        new_values, self.first, self.second = adam_step(
            values, grads, (self.first, self.second), per_param, self.step_count,
            self.beta1, self.beta2, self.eps)
        for param in self.params:
            param.assign(new_values[param.name])
        self.step_count += 1
        return group_rates

    def state(self) -> Tuple[Arrays, Arrays, int]:
        return dict(self.first), dict(self.second), self.step_count

    def load_state(self, first: Mapping[str, np.ndarray], second: Mapping[str, np.ndarray], step: int):
        names = set(self.groups)
        unknown = (set(first) | set(second)) - names
        if unknown:
            raise ContractError(f"optimizer state for non-trainable parameters: {sorted(unknown)}")
        self.first = {k: np.asarray(v) for k, v in first.items()}
        self.second = {k: np.asarray(v) for k, v in second.items()}
        self.step_count = int(step)
