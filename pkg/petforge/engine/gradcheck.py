"""
Finite-difference verification of analytic gradients.
"""
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from petforge.config.settings import GRAD_CHECK_FLOOR, GRAD_CHECK_STEP
from petforge.core.errors import ContractError, NumericError
from petforge.engine.params import Parameter
from petforge.engine.tensor import Tape, Tensor, backward


def _scalar(loss: Tensor) -> float:
    if loss.size != 1:
        raise ContractError(f"grad_check forward must return a scalar, got shape {loss.shape}")
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError(f"forward returned non-finite loss {value}")
    return value


def analytic_gradients(forward: Callable[[], Tensor], params: Sequence[Parameter]) -> Dict[str, np.ndarray]:
    with Tape() as tape:
        for param in params:
            param.bind(tape)
        try:
            loss = forward()
            _scalar(loss)
        finally:
            for param in params:
                param.release()
    return {name: g.data for name, g in backward(loss, tape).items()}


def grad_check(forward: Callable[[], Tensor], params: Sequence[Parameter],
               step: float = GRAD_CHECK_STEP, floor: float = GRAD_CHECK_FLOOR,
               report: Optional[Dict[str, float]] = None) -> float:
    """Worst relative error between analytic and central-difference gradients.

    Each element is perturbed by +/- `step`; the error of one element is
    |analytic - numeric| / max(|analytic|, |numeric|, floor). An empty
    parameter list checks nothing and returns 0. `report`, when given,
    receives the worst error per parameter name.
    """
    if step <= 0:
        raise ContractError(f"grad_check step must be positive, got {step}")
    params = list(params)
    if not params:
        return 0.0

    analytic = analytic_gradients(forward, params)
    worst = 0.0
    for param in params:
        original = np.array(param.value, dtype=param.value.dtype)
        grad = analytic[param.name].reshape(-1)
        param_worst = 0.0
        try:
            for flat_index in range(original.size):
                perturbed = original.copy().reshape(-1)
                perturbed[flat_index] = original.reshape(-1)[flat_index] + step
                param.assign(perturbed.reshape(original.shape))
                plus = _scalar(forward())
                perturbed[flat_index] = original.reshape(-1)[flat_index] - step
                param.assign(perturbed.reshape(original.shape))
                minus = _scalar(forward())
                numeric = (plus - minus) / (2.0 * step)
                a = float(grad[flat_index])
                if not np.isfinite(a):
                    raise NumericError(f"non-finite analytic gradient for '{param.name}'")
                err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
                param_worst = max(param_worst, err)
        finally:
            param.assign(original)
        if report is not None:
            report[param.name] = param_worst
        worst = max(worst, param_worst)
    return worst
