"""
Core Lab class - one run configuration, its data and its managers.
"""
import os
from typing import Any, Dict

from petforge.config.lab_config import LabConfig
from petforge.config.run_config import RunConfig
from petforge.data import DataManager
from petforge.data.models import Manifest
from petforge.data.serializers import JSONSerializer
from petforge.systems.evaluation_manager import EvaluationManager
from petforge.systems.pretrain_manager import PretrainManager
from petforge.systems.report_manager import ReportManager
from petforge.systems.sweep_manager import SweepManager
from petforge.systems.training_manager import TrainingManager
from petforge.utils.logger import log_debug, log_error, log_info, log_run_event
from petforge.utils.performance import get_performance_monitor, time_operation

RUN_CONFIG_FILE = 'run_config.json'


class Lab:
    """Central context every manager reaches through `self.lab`."""

    def __init__(self, config: RunConfig):
        log_info("Initializing lab...")
        try:
            self.config = config.validate()
            self.output_dir = config.output_dir
            self.data_manager = DataManager(config.data.corpus_dir)
            self.performance_monitor = get_performance_monitor()

            log_debug("Initializing lab managers...")
            self.pretrain_manager = PretrainManager(self)
            self.training_manager = TrainingManager(self)
            self.evaluation_manager = EvaluationManager(self)
            self.report_manager = ReportManager(self)
            self.sweep_manager = SweepManager(self)

            log_run_event("lab_initialized", {
                "method": config.method.method,
                "seed": config.seed,
                "output_dir": config.output_dir,
                "debug_mode": LabConfig.DEBUG_MODE,
            })
        except Exception as e:
            log_error(f"Failed to initialize lab: {e}")
            raise

    def path(self, name: str) -> str:
        """File inside the run's output directory (created on demand)."""
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)

    def save_config(self) -> str:
        """Record the effective configuration next to the run's artifacts."""
        path = self.path(RUN_CONFIG_FILE)
        JSONSerializer.save_to_file(self.config, path)
        return path

    def gen_data(self) -> Manifest:
        with time_operation("gen_data"):
            manifest = self.data_manager.generate_corpus(self.config.data)
        log_info(f"Corpus with {len(manifest)} utterances written to {self.config.data.corpus_dir}")
        return manifest

    def get_performance_info(self) -> Dict[str, Any]:
        return self.performance_monitor.get_performance_report()
