"""
Data Manager - Main interface for corpus, trial and checkpoint data.
"""

import os
from typing import Dict, Optional, Sequence

import numpy as np

from petforge.core.errors import CorpusIOError
from .loader import load_batch, load_utterance
from .models import Batch, Manifest, TrialSet
from .repositories import CheckpointRepository, ConfigRepository, CorpusRepository, TrialRepository
from .synthesis import SynthesisOptions, gen_corpus
from .trials import make_trials

TRIALS_FILE = 'trials.txt'
TRAIN_MANIFEST = 'train_manifest.tsv'
EVAL_MANIFEST = 'eval_manifest.tsv'


class DataManager:
    """
    Unified interface for all data operations of one corpus directory.
    Decouples the training and evaluation loops from file formats.
    """

    def __init__(self, corpus_dir: str):
        self.corpus_dir = corpus_dir
        self.corpus_repository = CorpusRepository(corpus_dir)
        self.trial_repository = TrialRepository()
        self.config_repository = ConfigRepository()
        self.checkpoint_repository = CheckpointRepository()
        self._manifests: Dict[str, Manifest] = {}

    # === CORPUS ===

    def generate_corpus(self, data_config) -> Manifest:
        """Synthesize the corpus, its train/eval split and the evaluation trial list."""
        manifest = gen_corpus(
            data_config.num_train_speakers + data_config.num_eval_speakers,
            data_config.utts_per_speaker,
            data_config.seed,
            self.corpus_dir,
            SynthesisOptions.from_data_config(data_config),
            num_eval_speakers=data_config.num_eval_speakers,
        )
        self._manifests.clear()
        trials = make_trials(self.eval_manifest(), data_config.num_target_trials,
                             data_config.num_nontarget_trials, data_config.seed)
        self.trial_repository.write_trials(trials, os.path.join(self.corpus_dir, TRIALS_FILE))
        return manifest

    def _manifest(self, name: str) -> Manifest:
        if name not in self._manifests:
            if not self.corpus_repository.exists(name):
                raise CorpusIOError(f"no {name} in {self.corpus_dir}; run gen-data first",
                                    path=os.path.join(self.corpus_dir, name))
            self._manifests[name] = self.corpus_repository.load_manifest(name)
        return self._manifests[name]

    def train_manifest(self) -> Manifest:
        return self._manifest(TRAIN_MANIFEST)

    def eval_manifest(self) -> Manifest:
        return self._manifest(EVAL_MANIFEST)

    def trials(self, path: Optional[str] = None) -> TrialSet:
        return self.trial_repository.load_trials(path or os.path.join(self.corpus_dir, TRIALS_FILE))

    # === BATCHES ===

    def training_batch(self, ids: Sequence[str], crop_len: int, rng: np.random.Generator,
                       dtype=np.float32) -> Batch:
        return load_batch(self.train_manifest(), ids, crop_len, self.corpus_repository,
                          mode='train', rng=rng, dtype=dtype)

    def eval_utterance(self, utt_id: str, crop_len: Optional[int] = None, dtype=np.float32) -> np.ndarray:
        return load_utterance(self.eval_manifest(), utt_id, self.corpus_repository, crop_len, dtype)

    # === SCORES ===

    def write_scores(self, trials: TrialSet, path: str):
        self.trial_repository.write_scores(trials, path)

    def load_scored_trials(self, trials_path: str, scores_path: str) -> TrialSet:
        trials = self.trial_repository.load_trials(trials_path)
        return self.trial_repository.attach_scores(trials, self.trial_repository.load_scores(scores_path))
