"""
Cosine trial scoring, equal error rate and minimum detection cost.

ROC convention: a trial is accepted when its score is >= the threshold, so
P_miss(t) is the fraction of targets below t and P_fa(t) the fraction of
nontargets at or above t. Thresholds are the distinct scores plus +inf
(reject everything).
"""
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Tuple, Union

import numpy as np

from petforge.config import settings
from petforge.core.errors import ConfigurationError, InputError, MissingEmbeddingError, NumericError
from petforge.data.models import TrialSet
from petforge.data.repositories import TrialRepository
from petforge.engine.tensor import Tensor

Lookup = Union[Mapping[str, np.ndarray], Callable[[str], np.ndarray]]


@dataclass(frozen=True)
class DcfParams:
    p_target: float = settings.DCF_P_TARGET
    c_miss: float = settings.DCF_C_MISS
    c_fa: float = settings.DCF_C_FA

    def validate(self):
        if not 0.0 < self.p_target < 1.0:
            raise ConfigurationError(f"p_target must lie in (0, 1), got {self.p_target}")
        if self.c_miss <= 0 or self.c_fa <= 0:
            raise ConfigurationError("detection costs must be positive")

    @property
    def normalizer(self) -> float:
        return min(self.p_target * self.c_miss, (1.0 - self.p_target) * self.c_fa)


def _vector(value) -> np.ndarray:
    if isinstance(value, Tensor):
        value = value.data
    return np.asarray(value, dtype=np.float64).reshape(-1)


def cosine_score(e1, e2) -> float:
    a, b = _vector(e1), _vector(e2)
    if a.shape != b.shape:
        raise InputError(f"embeddings differ in size: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise NumericError("cosine score of a zero-norm embedding")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _split(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise InputError(f"{scores.size} scores but {labels.size} labels")
    if not np.all(np.isfinite(scores)):
        raise NumericError("scores must be finite")
    targets = scores[labels == 1]
    nontargets = scores[labels != 1]
    if targets.size == 0 or nontargets.size == 0:
        raise InputError(f"need both classes, got {targets.size} targets and {nontargets.size} nontargets")
    return targets, nontargets


def error_rates(scores, labels) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, P_miss, P_fa) over every distinct score and +inf."""
    targets, nontargets = _split(scores, labels)
    thresholds = np.append(np.unique(np.concatenate([targets, nontargets])), np.inf)
    targets.sort()
    nontargets.sort()
    p_miss = np.searchsorted(targets, thresholds, side='left') / targets.size
    p_fa = 1.0 - np.searchsorted(nontargets, thresholds, side='left') / nontargets.size
    return thresholds, p_miss, p_fa


def compute_eer(scores, labels) -> float:
    """Miss/false-alarm crossing, linearly interpolated between bracketing thresholds."""
    _, p_miss, p_fa = error_rates(scores, labels)
    k = int(np.argmax(p_miss >= p_fa))
    if k == 0:
        return float(p_miss[0])
    d0 = p_fa[k - 1] - p_miss[k - 1]
    d1 = p_fa[k] - p_miss[k]
    t = d0 / (d0 - d1)
    return float(p_miss[k - 1] + t * (p_miss[k] - p_miss[k - 1]))


def compute_min_dcf(scores, labels, params: Optional[DcfParams] = None) -> float:
    params = params or DcfParams()
    params.validate()
    _, p_miss, p_fa = error_rates(scores, labels)
    cost = params.p_target * params.c_miss * p_miss + (1.0 - params.p_target) * params.c_fa * p_fa
    return float(cost.min() / params.normalizer)


def _resolve(lookup: Lookup, utt_id: str) -> np.ndarray:
    if callable(lookup):
        return lookup(utt_id)
    if utt_id not in lookup:
        raise MissingEmbeddingError(utt_id)
    return lookup[utt_id]


def score_trials(trials: TrialSet, lookup: Lookup, score_path: Optional[str] = None) -> TrialSet:
    """Cosine score per trial; writes `enroll test score` lines when `score_path` is set."""
    scored = trials.with_scores([cosine_score(_resolve(lookup, t.enroll_id), _resolve(lookup, t.test_id))
                                 for t in trials])
    if score_path is not None:
        TrialRepository.write_scores(scored, score_path)
    return scored


def evaluate_scores(trials: TrialSet, params: Optional[DcfParams] = None) -> Tuple[float, float]:
    """(EER, minDCF) of a scored trial set."""
    if not trials.has_scores:
        raise InputError("trial set carries no scores")
    return compute_eer(trials.scores, trials.labels), compute_min_dcf(trials.scores, trials.labels, params)
