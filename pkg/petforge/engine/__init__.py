"""
Tensor engine - arrays, tape-based differentiation, parameters and gradient checks.
"""

from .tensor import Tape, Tensor, backward, current_tape
from .params import Parameter, ParamRegistry
from .gradcheck import grad_check
from . import functional

__all__ = [
    'Tape',
    'Tensor',
    'backward',
    'current_tape',
    'Parameter',
    'ParamRegistry',
    'grad_check',
    'functional'
]
