"""
Data models for the synthetic corpus and verification trials.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class SpeakerProfile:
    """Acoustic signature of one synthetic speaker."""
    speaker_id: str
    index: int
    harmonics: Tuple[float, ...]
    tilt: float

    def amplitudes(self) -> np.ndarray:
        """Spectral tilt: the k-th harmonic is weighted by (k + 1) ** -tilt."""
        return (np.arange(1, len(self.harmonics) + 1, dtype=np.float64)) ** (-self.tilt)


@dataclass
class Utterance:
    utt_id: str
    speaker_id: str
    waveform: np.ndarray = field(repr=False)
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.waveform) / float(self.sample_rate)


@dataclass(frozen=True)
class ManifestRow:
    utt_id: str
    speaker_id: str
    path: str

    def to_line(self) -> str:
        return f"{self.utt_id}\t{self.speaker_id}\t{self.path}"

    @classmethod
    def from_line(cls, line: str) -> 'ManifestRow':
        utt_id, speaker_id, path = line.rstrip('\n').split('\t')
        return cls(utt_id, speaker_id, path)


@dataclass
class Manifest:
    """Ordered utterance list; paths are relative to `root`."""
    rows: List[ManifestRow] = field(default_factory=list)
    root: str = '.'

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[ManifestRow]:
        return iter(self.rows)

    def speakers(self) -> List[str]:
        """Speaker ids in first-appearance order."""
        seen: Dict[str, None] = {}
        for row in self.rows:
            seen.setdefault(row.speaker_id, None)
        return list(seen)

    def speaker_index(self) -> Dict[str, int]:
        """Contiguous label indices 0..S-1."""
        return {speaker: i for i, speaker in enumerate(self.speakers())}

    def ids(self) -> List[str]:
        return [row.utt_id for row in self.rows]

    def by_id(self) -> Dict[str, ManifestRow]:
        return {row.utt_id: row for row in self.rows}

    def utterances_of(self, speaker_id: str) -> List[ManifestRow]:
        return [row for row in self.rows if row.speaker_id == speaker_id]

    def subset(self, speaker_ids) -> 'Manifest':
        wanted = set(speaker_ids)
        return Manifest([row for row in self.rows if row.speaker_id in wanted], self.root)


@dataclass(frozen=True)
class Trial:
    label: int
    enroll_id: str
    test_id: str
    score: Optional[float] = None

    @property
    def is_target(self) -> bool:
        return self.label == 1


@dataclass
class TrialSet:
    trials: List[Trial] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self) -> Iterator[Trial]:
        return iter(self.trials)

    @property
    def labels(self) -> np.ndarray:
        return np.array([t.label for t in self.trials], dtype=np.int64)

    @property
    def scores(self) -> np.ndarray:
        return np.array([np.nan if t.score is None else t.score for t in self.trials], dtype=np.float64)

    @property
    def has_scores(self) -> bool:
        return all(t.score is not None for t in self.trials)

    def utterance_ids(self) -> List[str]:
        """Every utterance referenced by a trial, first-appearance order."""
        seen: Dict[str, None] = {}
        for trial in self.trials:
            seen.setdefault(trial.enroll_id, None)
            seen.setdefault(trial.test_id, None)
        return list(seen)

    def with_scores(self, scores) -> 'TrialSet':
        return TrialSet([Trial(t.label, t.enroll_id, t.test_id, float(s)) for t, s in zip(self.trials, scores)])


@dataclass
class Batch:
    """Fixed-length waveforms with contiguous speaker labels."""
    waveforms: np.ndarray
    labels: np.ndarray
    utt_ids: List[str]

    def __len__(self) -> int:
        return len(self.utt_ids)


__all__ = ['SpeakerProfile', 'Utterance', 'ManifestRow', 'Manifest', 'Trial', 'TrialSet', 'Batch']
