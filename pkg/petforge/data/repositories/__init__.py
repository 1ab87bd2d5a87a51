"""
Data repositories package.
"""

from .checkpoint_repository import CheckpointRepository, CheckpointState
from .config_repository import ConfigRepository
from .corpus_repository import CorpusRepository
from .trial_repository import TrialRepository

__all__ = ['CheckpointRepository', 'CheckpointState', 'ConfigRepository', 'CorpusRepository', 'TrialRepository']
