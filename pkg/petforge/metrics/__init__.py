"""
Metrics package - cosine scoring, EER and minDCF.
"""

from .scoring import (
    DcfParams,
    cosine_score,
    compute_eer,
    compute_min_dcf,
    error_rates,
    evaluate_scores,
    score_trials
)

__all__ = [
    'DcfParams',
    'cosine_score',
    'compute_eer',
    'compute_min_dcf',
    'error_rates',
    'evaluate_scores',
    'score_trials'
]
