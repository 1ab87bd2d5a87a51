"""
Sweep Manager - ablation grids over one method hyperparameter.
"""
import os
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Union

from petforge.core.errors import ConfigurationError
from petforge.data.serializers import CSVSerializer
from petforge.pet.accounting import count_trainable
from petforge.utils.logger import log_info, log_run_event

SWEEP_AXES = ('bottleneck_dim', 'scale', 'prompt_length', 'adapter_mode', 'lora_rank')
SWEEP_FILE = 'sweep.csv'

Value = Union[int, float, str]


@dataclass
class SweepRow:
    value: Value
    trainable: int
    eer: float
    min_dcf: float


def parse_value(axis: str, raw: str) -> Value:
    """Command-line text to a typed sweep value."""
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}, got '{axis}'")
    if axis == 'adapter_mode' or (axis == 'scale' and raw == 'learnable'):
        return raw
    try:
        return float(raw) if axis == 'scale' else int(raw)
    except ValueError:
        raise ConfigurationError(f"'{raw}' is not a valid {axis}") from None


class SweepManager:
    """Each grid point trains and evaluates in its own output subdirectory."""

    def __init__(self, lab):
        self.lab = lab

    def sweep(self, axis: str, values: Sequence[Value], out_path: Optional[str] = None) -> List[SweepRow]:
        from petforge.core.lab import Lab

        if axis not in SWEEP_AXES:
            raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}, got '{axis}'")
        if not values:
            raise ConfigurationError("sweep needs at least one value")
        base = self.lab.config
        rows = []
        for value in values:
            spec = replace(base.method, **{axis: value})
            child = replace(base, method=spec,
                            output_dir=os.path.join(base.output_dir, f"sweep_{axis}_{value}")).validate()
            log_info(f"Sweep {axis}={value}")
            lab = Lab(child)
            trained = lab.training_manager.train()
            result = lab.evaluation_manager.evaluate(trained.checkpoint_path)
            count, _ = count_trainable(spec, child.backbone)
            rows.append(SweepRow(value, count, result.eer, result.min_dcf))
            log_run_event("sweep_point", {"axis": axis, "value": value, "eer": result.eer})

        out_path = out_path or self.lab.path(SWEEP_FILE)
        CSVSerializer.save_to_file(out_path, (axis, 'trainable', 'eer', 'mindcf'),
                                   [(row.value, row.trainable, repr(row.eer), repr(row.min_dcf)) for row in rows])
        return rows
