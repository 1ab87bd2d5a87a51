"""
Spectral frame features used as pseudo-pretraining targets.
"""
import numpy as np

from petforge.core.errors import InputError


def log_band_energies(waveform: np.ndarray, frame_len: int, hop: int, num_bands: int,
                      num_frames: int = None) -> np.ndarray:
    """Per-frame log energies in `num_bands` equal-width bands: [frames, num_bands].

    Frame j covers samples [j * hop, j * hop + frame_len), matching the frame
    grid of a conv stack with that receptive field and total stride.
    """
    waveform = np.asarray(waveform, dtype=np.float64)
    available = (len(waveform) - frame_len) // hop + 1 if len(waveform) >= frame_len else 0
    count = available if num_frames is None else min(num_frames, available)
    if count < 1:
        raise InputError(f"waveform of {len(waveform)} samples is shorter than one frame of {frame_len}")
    index = np.arange(count)[:, None] * hop + np.arange(frame_len)[None, :]
    windowed = waveform[index] * np.hanning(frame_len)[None, :]
    power = np.abs(np.fft.rfft(windowed, axis=-1)) ** 2
    edges = np.linspace(0, power.shape[1], num_bands + 1).astype(int)
    bands = np.stack([power[:, lo:max(hi, lo + 1)].mean(axis=1) for lo, hi in zip(edges[:-1], edges[1:])], axis=1)
    return np.log(bands + 1e-6)


def standardize(features: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance per band over all leading axes."""
    flat = features.reshape(-1, features.shape[-1])
    mu = flat.mean(axis=0)
    sd = flat.std(axis=0) + 1e-6
    return (features - mu) / sd
