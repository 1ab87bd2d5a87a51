"""
Lab systems - one manager per harness operation plus the optimizer.
"""

from .optimizer import AdamOptimizer, Schedule, adam_step
from .pretrain_manager import PretrainManager
from .training_manager import TrainingManager
from .evaluation_manager import EvaluationManager
from .report_manager import ReportManager
from .sweep_manager import SweepManager

__all__ = [
    'AdamOptimizer',
    'Schedule',
    'adam_step',
    'PretrainManager',
    'TrainingManager',
    'EvaluationManager',
    'ReportManager',
    'SweepManager'
]
