"""
Synthetic speaker corpus: per-speaker harmonic signatures in white noise.

Every random draw comes from a generator seeded by (corpus seed, speaker, utterance),
so the corpus is a pure function of its seed and options.
"""
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from perlin_noise import PerlinNoise

from petforge.config import settings
from petforge.core.errors import InputError
from petforge.utils.logger import log_info, log_run_event
from .models import Manifest, ManifestRow, SpeakerProfile, Utterance
from .repositories import CorpusRepository


@dataclass(frozen=True)
class SynthesisOptions:
    sample_rate: int = settings.SAMPLE_RATE
    num_harmonics: int = settings.NUM_HARMONICS
    snr_db: float = settings.SNR_DB
    min_duration: float = settings.MIN_DURATION
    max_duration: float = settings.MAX_DURATION
    envelope_depth: float = 0.5
    pitch_wander: float = 0.02

    @classmethod
    def from_data_config(cls, data) -> 'SynthesisOptions':
        return cls(sample_rate=data.sample_rate, num_harmonics=data.num_harmonics, snr_db=data.snr_db,
                   min_duration=data.min_duration, max_duration=data.max_duration)


def speaker_id(index: int) -> str:
    return f"spk{index:03d}"


def make_profile(seed: int, index: int, options: SynthesisOptions) -> SpeakerProfile:
    rng = np.random.default_rng([seed, index])
    top = 0.45 * options.sample_rate
    harmonics = np.sort(rng.uniform(80.0, top, options.num_harmonics))
    tilt = float(rng.uniform(0.3, 1.5))
    return SpeakerProfile(speaker_id(index), index, tuple(float(h) for h in harmonics), tilt)


def _control_curve(noise: PerlinNoise, duration: float, t: np.ndarray) -> np.ndarray:
    """Slow Perlin curve sampled at a few control points and interpolated over `t`."""
    count = max(2, int(math.ceil(duration * 8)) + 2)
    positions = np.linspace(0.0, duration, count)
    values = [noise([0.31 + 1.7 * float(x)]) for x in positions]
    return np.interp(t, positions, values)


def synthesize(profile: SpeakerProfile, utt_index: int, seed: int, options: SynthesisOptions) -> Utterance:
    rng = np.random.default_rng([seed, profile.index, utt_index, 1])
    sr = options.sample_rate
    duration = float(rng.uniform(options.min_duration, options.max_duration))
    length = max(1, int(round(duration * sr)))
    t = np.arange(length, dtype=np.float64) / sr

    noise_seed = int(rng.integers(1, 2 ** 31 - 1))
    envelope = 1.0 + options.envelope_depth * _control_curve(PerlinNoise(octaves=settings.PERLIN_OCTAVES,
                                                                         seed=noise_seed), duration, t)
    wander = 1.0 + options.pitch_wander * _control_curve(PerlinNoise(octaves=settings.PERLIN_OCTAVES,
                                                                     seed=noise_seed + 1), duration, t)

    harmonics = np.asarray(profile.harmonics)
    amplitudes = profile.amplitudes() * rng.uniform(0.7, 1.3, len(harmonics))
    phases = rng.uniform(0.0, 2.0 * np.pi, len(harmonics))

    # [K, L] instantaneous phase of each partial
    inst_freq = harmonics[:, None] * wander[None, :]
    phase = phases[:, None] + 2.0 * np.pi * np.cumsum(inst_freq, axis=1) / sr
    signal = envelope * (amplitudes[:, None] * np.sin(phase)).sum(axis=0)
    signal /= np.sqrt(np.mean(signal ** 2)) + 1e-12

    noise_std = math.sqrt(1.0 / (10.0 ** (options.snr_db / 10.0)))
    waveform = (signal + noise_std * rng.standard_normal(length)).astype(np.float32)
    return Utterance(f"{profile.speaker_id}-u{utt_index:03d}", profile.speaker_id, waveform, sr)


def gen_corpus(num_speakers: int, utts_per_speaker: int, seed: int, out_dir: str,
               options: Optional[SynthesisOptions] = None, num_eval_speakers: int = 0) -> Manifest:
    """Write a corpus under `out_dir` and return its full manifest.

    With `num_eval_speakers` > 0 the last speakers form a disjoint evaluation
    partition and `train_manifest.tsv` / `eval_manifest.tsv` are written too.
    """
    if num_speakers < 2:
        raise InputError(f"a corpus needs at least 2 speakers, got {num_speakers}")
    if utts_per_speaker < 1:
        raise InputError(f"utts_per_speaker must be positive, got {utts_per_speaker}")
    if not 0 <= num_eval_speakers < num_speakers:
        raise InputError(f"num_eval_speakers={num_eval_speakers} must leave training speakers")
    options = options or SynthesisOptions()

    repository = CorpusRepository(out_dir)
    rows: List[ManifestRow] = []
    for index in range(num_speakers):
        profile = make_profile(seed, index, options)
        for utt_index in range(utts_per_speaker):
            utt = synthesize(profile, utt_index, seed, options)
            path = repository.write_waveform(utt.speaker_id, utt.utt_id, utt.waveform, utt.sample_rate)
            rows.append(ManifestRow(utt.utt_id, utt.speaker_id, path))

    manifest = Manifest(rows, out_dir)
    repository.write_manifest(manifest)
    if num_eval_speakers:
        speakers = manifest.speakers()
        repository.write_manifest(manifest.subset(speakers[:-num_eval_speakers]), 'train_manifest.tsv')
        repository.write_manifest(manifest.subset(speakers[-num_eval_speakers:]), 'eval_manifest.tsv')

    log_run_event("corpus_generated", {'speakers': num_speakers, 'utterances': len(rows), 'seed': seed})
    log_info(f"Wrote {len(rows)} utterances to {out_dir}")
    return manifest
