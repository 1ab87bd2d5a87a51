"""
Trial repository - trial lists and score files.
"""

import os

from petforge.config.settings import SCORE_DECIMALS
from petforge.core.errors import CorpusIOError, FormatError
from ..models import Trial, TrialSet


class TrialRepository:
    """Text formats: `label enroll test` for trials, `enroll test score` for scores."""

    @staticmethod
    def write_trials(trials: TrialSet, path: str):
        try:
            _ensure_dir(path)
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                for t in trials:
                    f.write(f"{t.label} {t.enroll_id} {t.test_id}\n")
        except OSError as e:
            raise CorpusIOError(f"cannot write trials {path}: {e}", path=path) from e

    @staticmethod
    def load_trials(path: str) -> TrialSet:
        trials = []
        for line_no, parts in _lines(path):
            if len(parts) != 3 or parts[0] not in ('0', '1'):
                raise FormatError(f"{path}:{line_no}: expected 'label enroll_id test_id' with label 0/1")
            trials.append(Trial(int(parts[0]), parts[1], parts[2]))
        return TrialSet(trials)

    @staticmethod
    def write_scores(trials: TrialSet, path: str):
        try:
            _ensure_dir(path)
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                for t in trials:
                    f.write(f"{t.enroll_id} {t.test_id} {t.score:.{SCORE_DECIMALS}f}\n")
        except OSError as e:
            raise CorpusIOError(f"cannot write scores {path}: {e}", path=path) from e

    @staticmethod
    def load_scores(path: str):
        """List of (enroll_id, test_id, score) in file order."""
        scores = []
        for line_no, parts in _lines(path):
            if len(parts) != 3:
                raise FormatError(f"{path}:{line_no}: expected 'enroll_id test_id score'")
            try:
                scores.append((parts[0], parts[1], float(parts[2])))
            except ValueError:
                raise FormatError(f"{path}:{line_no}: score '{parts[2]}' is not a number") from None
        return scores

    @staticmethod
    def attach_scores(trials: TrialSet, scores) -> TrialSet:
        """Match a score file to a trial list by (enroll, test)."""
        lookup = {(e, t): s for e, t, s in scores}
        attached = []
        for trial in trials:
            key = (trial.enroll_id, trial.test_id)
            if key not in lookup:
                raise FormatError(f"score file has no entry for trial {key[0]} {key[1]}")
            attached.append(Trial(trial.label, trial.enroll_id, trial.test_id, lookup[key]))
        return TrialSet(attached)


def _ensure_dir(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def _lines(path: str):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            content = f.readlines()
    except OSError as e:
        raise CorpusIOError(f"cannot read {path}: {e}", path=path) from e
    for line_no, line in enumerate(content, 1):
        if line.strip():
            yield line_no, line.split()
