"""
Corpus repository - waveform files and manifests of a synthetic corpus.
"""

import os
from collections import OrderedDict
from typing import Tuple

import numpy as np

from petforge.config.settings import WAVEFORM_TENSOR
from petforge.core.errors import CorpusIOError, FormatError
from ..models import Manifest, ManifestRow
from ..serializers import PetwSerializer


class CorpusRepository:
    """Reads and writes one corpus directory."""

    def __init__(self, root: str, cache_size: int = 2048):
        self.root = root
        self.cache_size = cache_size
        self.waveform_cache: 'OrderedDict[str, Tuple[np.ndarray, int]]' = OrderedDict()

    @staticmethod
    def waveform_path(speaker_id: str, utt_id: str) -> str:
        return os.path.join('wav', speaker_id, f"{utt_id}.petw")

    def write_waveform(self, speaker_id: str, utt_id: str, waveform: np.ndarray, sample_rate: int) -> str:
        """Store one utterance; returns its path relative to the corpus root."""
        rel_path = self.waveform_path(speaker_id, utt_id)
        try:
            PetwSerializer.save_to_file(
                {f"{WAVEFORM_TENSOR}@{sample_rate}": np.asarray(waveform, dtype=np.float32)},
                os.path.join(self.root, rel_path))
        except OSError as e:
            raise CorpusIOError(f"cannot write waveform {rel_path}: {e}", path=rel_path) from e
        return rel_path

    def read_waveform(self, rel_path: str) -> Tuple[np.ndarray, int]:
        """(samples, sample_rate) of one stored utterance."""
        cached = self.waveform_cache.get(rel_path)
        if cached is not None:
            self.waveform_cache.move_to_end(rel_path)
            return cached
        full_path = os.path.join(self.root, rel_path)
        try:
            tensors = PetwSerializer.load_from_file(full_path)
        except OSError as e:
            raise CorpusIOError(f"cannot read waveform {full_path}: {e}", path=full_path) from e
        if len(tensors) != 1:
            raise FormatError(f"{full_path} must hold exactly one waveform tensor")
        (name, samples), = tensors.items()
        base, _, rate = name.partition('@')
        if base != WAVEFORM_TENSOR or not rate.isdigit() or samples.ndim != 1:
            raise FormatError(f"{full_path} holds '{name}' instead of a rank-1 '{WAVEFORM_TENSOR}@<rate>'")
        samples.flags.writeable = False
        entry = (samples, int(rate))
        self.waveform_cache[rel_path] = entry
        if len(self.waveform_cache) > self.cache_size:
            self.waveform_cache.popitem(last=False)
        return entry

    def write_manifest(self, manifest: Manifest, name: str = 'manifest.tsv') -> str:
        path = os.path.join(self.root, name)
        try:
            os.makedirs(self.root, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                for row in manifest:
                    f.write(row.to_line() + '\n')
        except OSError as e:
            raise CorpusIOError(f"cannot write manifest {path}: {e}", path=path) from e
        return path

    def load_manifest(self, name: str = 'manifest.tsv') -> Manifest:
        path = os.path.join(self.root, name)
        rows = []
        try:
            with open(path, 'r', encoding='utf-8') as f:
                for line_no, line in enumerate(f, 1):
                    if not line.strip():
                        continue
                    try:
                        rows.append(ManifestRow.from_line(line))
                    except ValueError:
                        raise FormatError(f"{path}:{line_no}: expected utt_id<TAB>speaker_id<TAB>path") from None
        except OSError as e:
            raise CorpusIOError(f"cannot read manifest {path}: {e}", path=path) from e
        ids = [row.utt_id for row in rows]
        if len(set(ids)) != len(ids):
            raise FormatError(f"{path} repeats utterance ids")
        return Manifest(rows, self.root)

    def exists(self, name: str = 'manifest.tsv') -> bool:
        return os.path.exists(os.path.join(self.root, name))
