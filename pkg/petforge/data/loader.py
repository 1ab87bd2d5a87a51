"""
Batch loading with random (training) or center (evaluation) crops.
"""
from typing import Dict, Optional, Sequence

import numpy as np

from petforge.core.errors import InputError
from .models import Batch, Manifest
from .repositories import CorpusRepository


def normalize(waveform: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance."""
    waveform = waveform.astype(np.float64)
    centered = waveform - waveform.mean()
    return centered / (centered.std() + 1e-8)


def crop(waveform: np.ndarray, crop_len: int, mode: str, rng: Optional[np.random.Generator] = None,
         pad: bool = False) -> np.ndarray:
    length = len(waveform)
    if length < crop_len:
        if not pad:
            raise InputError(f"utterance of {length} samples is shorter than crop_len={crop_len}")
        return np.concatenate([waveform, np.zeros(crop_len - length, dtype=waveform.dtype)])
    if mode == 'train':
        if rng is None:
            raise InputError("random crops need a generator")
        start = int(rng.integers(0, length - crop_len + 1))
    else:
        start = (length - crop_len) // 2
    return waveform[start:start + crop_len]


def load_batch(manifest: Manifest, ids: Sequence[str], crop_len: int, repository: CorpusRepository,
               mode: str = 'train', rng: Optional[np.random.Generator] = None, pad: bool = False,
               label_map: Optional[Dict[str, int]] = None, dtype=np.float32) -> Batch:
    """Equal-length waveforms [B, crop_len] and contiguous labels 0..S-1."""
    if not ids:
        raise InputError("cannot load an empty batch")
    rows = manifest.by_id()
    label_map = label_map if label_map is not None else manifest.speaker_index()
    waveforms, labels = [], []
    for utt_id in ids:
        if utt_id not in rows:
            raise InputError(f"utterance '{utt_id}' is not in the manifest")
        row = rows[utt_id]
        samples, _ = repository.read_waveform(row.path)
        waveforms.append(normalize(crop(samples, crop_len, mode, rng, pad)))
        labels.append(label_map[row.speaker_id])
    return Batch(np.stack(waveforms).astype(dtype), np.array(labels, dtype=np.int64), list(ids))


def load_utterance(manifest: Manifest, utt_id: str, repository: CorpusRepository,
                   crop_len: Optional[int] = None, dtype=np.float32) -> np.ndarray:
    """One normalized utterance, whole or center-cropped: [1, L]."""
    row = manifest.by_id().get(utt_id)
    if row is None:
        raise InputError(f"utterance '{utt_id}' is not in the manifest")
    samples, _ = repository.read_waveform(row.path)
    if crop_len is not None and len(samples) > crop_len:
        samples = crop(samples, crop_len, 'eval')
    return normalize(samples)[None, :].astype(dtype)
