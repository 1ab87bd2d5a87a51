"""
Trial list construction from held-out speakers.
"""
from itertools import combinations
from typing import List, Tuple

import numpy as np

from petforge.core.errors import InputError
from .models import Manifest, Trial, TrialSet


def _target_pairs(manifest: Manifest) -> List[Tuple[str, str]]:
    pairs = []
    for speaker in manifest.speakers():
        utts = [row.utt_id for row in manifest.utterances_of(speaker)]
        pairs.extend(combinations(utts, 2))
    return pairs


def _nontarget_pairs(manifest: Manifest) -> List[Tuple[str, str]]:
    rows = manifest.rows
    return [(a.utt_id, b.utt_id) for i, a in enumerate(rows) for b in rows[i + 1:]
            if a.speaker_id != b.speaker_id]


def make_trials(manifest: Manifest, num_target: int, num_nontarget: int, seed: int) -> TrialSet:
    """Sample distinct same-speaker and cross-speaker pairs, targets first then shuffled."""
    if num_target < 0 or num_nontarget < 0:
        raise InputError("trial counts must be non-negative")
    rng = np.random.default_rng([seed, 7])
    targets = _target_pairs(manifest)
    nontargets = _nontarget_pairs(manifest)
    if num_target > len(targets):
        raise InputError(f"only {len(targets)} same-speaker pairs available, {num_target} requested")
    if num_nontarget > len(nontargets):
        raise InputError(f"only {len(nontargets)} cross-speaker pairs available, {num_nontarget} requested")

    chosen = [Trial(1, *targets[i]) for i in rng.choice(len(targets), num_target, replace=False)]
    chosen += [Trial(0, *nontargets[i]) for i in rng.choice(len(nontargets), num_nontarget, replace=False)]
    order = rng.permutation(len(chosen))
    return TrialSet([chosen[i] for i in order])
