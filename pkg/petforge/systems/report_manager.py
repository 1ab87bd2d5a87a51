"""
Report Manager - parameter tables and layer-weight exports.
"""
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from petforge.core.errors import ContractError
from petforge.data.repositories import CheckpointRepository
from petforge.data.serializers import CSVSerializer
from petforge.pet.accounting import count_trainable, head_parameter_count
from petforge.pet.method import METHODS
from petforge.utils.logger import log_info

PARAMS_FILE = 'params.csv'
LAYER_WEIGHTS_FILE = 'layer_weights.csv'
LAYER_WEIGHT_TENSORS = ('head.layer_weights', 'pet.inter.layer_weights')


@dataclass
class ParamRow:
    method: str
    trainable: int
    fraction: float
    backend: int

    def as_csv(self):
        return self.method, self.trainable, f"{self.fraction:.6f}", self.backend


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


class ReportManager:
    def __init__(self, lab):
        self.lab = lab

    def report_params(self, methods: Optional[Sequence[str]] = None,
                      out_path: Optional[str] = None) -> List[ParamRow]:
        """One row per method at the configured backbone scale and method hyperparameters."""
        config = self.lab.config
        rows = []
        for method in methods or METHODS:
            spec = replace(config.method, method=method)
            count, fraction = count_trainable(spec, config.backbone)
            backend = head_parameter_count(spec, config.backbone, config.head)
            rows.append(ParamRow(method, count, fraction, backend))
        out_path = out_path or self.lab.path(PARAMS_FILE)
        CSVSerializer.save_to_file(out_path, ('method', 'trainable', 'fraction', 'backend'),
                                   [row.as_csv() for row in rows])
        log_info(f"Parameter report for {len(rows)} methods written to {out_path}")
        return rows

    def export_layer_weights(self, checkpoint_path: str, out_path: Optional[str] = None) -> List[float]:
        """Softmax-normalized layer weights, one row per Transformer layer."""
        params = CheckpointRepository.load(checkpoint_path).params
        name = next((n for n in LAYER_WEIGHT_TENSORS if n in params), None)
        if name is None:
            raise ContractError(f"method '{self.lab.config.method.method}' has no learnable layer weights")
        weights = softmax(np.asarray(params[name], dtype=np.float64))
        out_path = out_path or self.lab.path(LAYER_WEIGHTS_FILE)
        CSVSerializer.save_to_file(out_path, ('layer', 'weight'),
                                   [(i, repr(float(w))) for i, w in enumerate(weights, start=1)])
        log_info(f"Exported {len(weights)} layer weights from {name}")
        return [float(w) for w in weights]
