"""
Evaluation Manager - embeddings for trial utterances, cosine scores, EER and minDCF.
"""
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from petforge.core.errors import ContractError
from petforge.data.models import TrialSet
from petforge.data.repositories import CheckpointRepository
from petforge.data.serializers import CSVSerializer
from petforge.metrics.scoring import DcfParams, evaluate_scores, score_trials
from petforge.model.speaker_model import SpeakerModel
from petforge.utils.logger import log_info, log_run_event
from petforge.utils.performance import time_operation

SCORE_FILE = 'scores.txt'
METRICS_FILE = 'metrics.csv'
GATES_FILE = 'gates.csv'


@dataclass
class EvaluationResult:
    eer: float
    min_dcf: float
    score_path: str
    metrics_path: str
    num_trials: int

    def summary(self) -> str:
        return f"eer={self.eer:.6f} mindcf={self.min_dcf:.6f}"


def gate_family(name: str) -> Tuple[str, int]:
    """'pet.gate.adapter3' -> ('adapter', 3); the inter gate has layer 0."""
    tail = name.rsplit('.', 1)[-1]
    for family in ('prompt', 'adapter', 'inter'):
        if tail.startswith(family):
            digits = tail[len(family):]
            return family, int(digits) if digits else 0
    raise ContractError(f"'{name}' is not a gate")


class EvaluationManager:
    """Scores the evaluation trial list with a trained (or freshly initialized) model."""

    def __init__(self, lab):
        self.lab = lab

    def load_model(self, checkpoint_path: Optional[str] = None) -> SpeakerModel:
        model = self.lab.training_manager.build_model()
        if checkpoint_path:
            model.registry.load_arrays(CheckpointRepository.load(checkpoint_path).params, strict=True)
        else:
            log_info("Evaluating a freshly initialized model (no checkpoint given)")
        return model

    def _crop_len(self) -> Optional[int]:
        seconds = self.lab.config.eval_crop_seconds
        return None if seconds is None else int(round(seconds * self.lab.config.data.sample_rate))

    def embeddings(self, model: SpeakerModel, utt_ids: List[str],
                   gate_log: Optional[Dict[str, List[float]]] = None) -> Dict[str, np.ndarray]:
        """Whole-utterance embeddings, one utterance per forward pass."""
        dtype = np.dtype(self.lab.config.dtype)
        crop_len = self._crop_len()
        found = {}
        for utt_id in utt_ids:
            waveform = self.lab.data_manager.eval_utterance(utt_id, crop_len, dtype)
            ctx = model.context()
            found[utt_id] = model.embed(waveform, ctx=ctx).data[0]
            if gate_log is not None:
                for name, value in ctx.gate_values.items():
                    gate_log[name].append(float(value.data.reshape(-1)[0]))
        return found

    def evaluate(self, checkpoint_path: Optional[str] = None, trials: Optional[TrialSet] = None,
                 score_path: Optional[str] = None, params: Optional[DcfParams] = None) -> EvaluationResult:
        trials = trials if trials is not None else self.lab.data_manager.trials()
        score_path = score_path or self.lab.path(SCORE_FILE)
        model = self.load_model(checkpoint_path)

        with time_operation("evaluation"):
            embeddings = self.embeddings(model, trials.utterance_ids())
            scored = score_trials(trials, embeddings, score_path)
            eer, min_dcf = evaluate_scores(scored, params)

        return self._record(eer, min_dcf, score_path, len(trials))

    def score_file(self, trials_path: str, scores_path: str,
                   params: Optional[DcfParams] = None) -> EvaluationResult:
        """Metrics of an existing score file against its trial list; no model involved."""
        scored = self.lab.data_manager.load_scored_trials(trials_path, scores_path)
        eer, min_dcf = evaluate_scores(scored, params)
        return self._record(eer, min_dcf, scores_path, len(scored))

    def _record(self, eer: float, min_dcf: float, score_path: str, num_trials: int) -> EvaluationResult:
        metrics_path = self.lab.path(METRICS_FILE)
        CSVSerializer.save_to_file(metrics_path, ('eer', 'mindcf', 'trials'), [(repr(eer), repr(min_dcf), num_trials)])
        log_run_event("evaluation_finished", {"method": self.lab.config.method.method,
                                              "eer": eer, "mindcf": min_dcf, "trials": num_trials})
        return EvaluationResult(eer, min_dcf, score_path, metrics_path, num_trials)

    def export_gates(self, checkpoint_path: Optional[str] = None, out_path: Optional[str] = None,
                     trials: Optional[TrialSet] = None) -> List[Tuple[str, int, float]]:
        """Mean gate value per (family, layer) over the evaluation utterances."""
        if not self.lab.config.method.gated:
            raise ContractError(f"method '{self.lab.config.method.method}' has no gates")
        trials = trials if trials is not None else self.lab.data_manager.trials()
        model = self.load_model(checkpoint_path)
        gate_log: Dict[str, List[float]] = defaultdict(list)
        self.embeddings(model, trials.utterance_ids(), gate_log)

        rows = sorted((gate_family(name) + (float(np.mean(values)),) for name, values in gate_log.items()),
                      key=lambda row: (row[0], row[1]))
        out_path = out_path or self.lab.path(GATES_FILE)
        CSVSerializer.save_to_file(out_path, ('family', 'layer', 'mean_gate'),
                                   [(family, layer, repr(value)) for family, layer, value in rows])
        log_info(f"Exported {len(rows)} gates to {out_path}")
        return rows
