"""
Named parameters and the registry that partitions them into trainable and frozen.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from petforge.core.errors import ContractError, ShapeError
from petforge.engine.tensor import Tape, Tensor


def _fans(shape: Tuple[int, ...]) -> Tuple[int, int]:
    if len(shape) == 0:
        return 1, 1
    if len(shape) == 1:
        return shape[0], shape[0]
    receptive = int(np.prod(shape[:-2])) if len(shape) > 2 else 1
    return shape[-2] * receptive, shape[-1] * receptive


def init_zeros(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    return np.zeros(shape, dtype=dtype)


def init_ones(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    return np.ones(shape, dtype=dtype)


def init_xavier_uniform(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    fan_in, fan_out = _fans(shape)
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_he_normal(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    fan_in, _ = _fans(shape)
    return (rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)).astype(dtype)


def init_fan_in_uniform(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    fan_in, _ = _fans(shape)
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_normal(std: float) -> Callable:
    def _init(rng: np.random.Generator, shape, dtype) -> np.ndarray:
        return (rng.standard_normal(shape) * std).astype(dtype)
    return _init


def init_constant(value: float) -> Callable:
    def _init(rng: np.random.Generator, shape, dtype) -> np.ndarray:
        return np.full(shape, value, dtype=dtype)
    return _init


INITIALIZERS = {
    'zeros': init_zeros,
    'ones': init_ones,
    'xavier_uniform': init_xavier_uniform,
    'he_normal': init_he_normal,
    'fan_in_uniform': init_fan_in_uniform,
}


@dataclass
class Parameter:
    """One named tensor of the model with its freezing flag and owning module."""
    name: str
    shape: Tuple[int, ...]
    owner: str
    trainable: bool = True
    dtype: str = 'float32'
    value: Optional[np.ndarray] = field(default=None, repr=False)
    _frozen: Optional[Tensor] = field(default=None, repr=False, compare=False)
    _tracked: Optional[Tensor] = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def tensor(self) -> Tensor:
        """The tensor forward passes read: tracked while bound to a tape."""
        if self._tracked is not None:
            return self._tracked
        if self.value is None:
            raise ContractError(f"parameter '{self.name}' has no values (shape-only registry)")
        if self._frozen is None:
            self._frozen = Tensor(self.value, dtype=self.value.dtype)
        return self._frozen

    def assign(self, value: np.ndarray):
        value = np.asarray(value)
        if tuple(value.shape) != tuple(self.shape):
            raise ShapeError(
                f"parameter '{self.name}' expects shape {tuple(self.shape)}, got {tuple(value.shape)}",
                name=self.name)
        self.value = np.array(value, dtype=self.dtype)
        self.value.flags.writeable = False
        self._frozen = None

    def bind(self, tape: Tape) -> Tensor:
        self._tracked = tape.watch(self.name, self.tensor)
        return self._tracked

    def release(self):
        self._tracked = None


class ParamRegistry:
    """Authoritative map of every named parameter of a model.

    With `rng=None` the registry only records shapes, which is how parameter
    accounting runs at full scale without allocating anything.
    """

    def __init__(self, rng: Optional[np.random.Generator] = None, dtype: str = 'float32'):
        self.rng = rng
        self.dtype = dtype
        self._params: Dict[str, Parameter] = {}

    @property
    def materialized(self) -> bool:
        return self.rng is not None

    def declare(self, name: str, shape: Sequence[int], owner: str,
                init='xavier_uniform', trainable: bool = True) -> Parameter:
        """Create a parameter; values are drawn from the registry rng in declaration order."""
        if name in self._params:
            raise ContractError(f"duplicate parameter name '{name}'")
        shape = tuple(int(s) for s in shape)
        param = Parameter(name=name, shape=shape, owner=owner, trainable=trainable, dtype=self.dtype)
        if self.rng is not None:
            init_fn = INITIALIZERS[init] if isinstance(init, str) else init
            param.assign(init_fn(self.rng, shape, self.dtype))
        self._params[name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def parameters(self, trainable: Optional[bool] = None, owner: Optional[str] = None,
                   prefix: Optional[str] = None) -> List[Parameter]:
        selected = []
        for param in self._params.values():
            if trainable is not None and param.trainable != trainable:
                continue
            if owner is not None and param.owner != owner:
                continue
            if prefix is not None and not param.name.startswith(prefix):
                continue
            selected.append(param)
        return selected

    def count(self, trainable: Optional[bool] = None, owner: Optional[str] = None,
              prefix: Optional[str] = None) -> int:
        return sum(p.size for p in self.parameters(trainable, owner, prefix))

    def set_trainable(self, predicate: Callable[[Parameter], bool]):
        for param in self._params.values():
            param.trainable = bool(predicate(param))

    def watch(self, tape: Tape, params: Optional[Iterable[Parameter]] = None) -> Dict[str, Tensor]:
        """Bind trainable parameters (or `params`) to `tape` as tracked roots."""
        params = self.parameters(trainable=True) if params is None else list(params)
        return {p.name: p.bind(tape) for p in params}

    def release(self):
        for param in self._params.values():
            param.release()

    def state_arrays(self, prefix: Optional[str] = None) -> Dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters(prefix=prefix)}

    def load_arrays(self, arrays: Dict[str, np.ndarray], strict: bool = True,
                    prefix: Optional[str] = None):
        """Assign stored arrays; a shape mismatch names the offending parameter."""
        expected = self.parameters(prefix=prefix)
        if strict:
            missing = [p.name for p in expected if p.name not in arrays]
            if missing:
                raise ShapeError(f"stored weights lack parameter '{missing[0]}'", name=missing[0])
        for param in expected:
            if param.name in arrays:
                param.assign(arrays[param.name])
