"""Integration tests for the petforge command line."""

import io
import os
import sys
import unittest
from unittest.mock import patch

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))

from tests.test_config import CorpusTestCase
from petforge.cli import build_parser, load_config, main
from petforge.config import settings
from petforge.core.errors import NumericAbortError
from petforge.data.repositories import ConfigRepository
from petforge.systems.training_manager import TrainingManager


class CliTestCase(CorpusTestCase):

    def setUp(self):
        super().setUp()
        self.out_dir = os.path.join(self.work_dir, 'run')
        self.config_path = os.path.join(self.work_dir, 'run_config.json')
        ConfigRepository().save_run_config(self.run_config('unipet', total_steps=2, output_dir=self.out_dir),
                                           self.config_path)

    def run_cli(self, *argv):
        """Exit code and captured stdout."""
        with patch('sys.stdout', new_callable=io.StringIO) as stdout:
            code = main(list(argv))
        return code, stdout.getvalue()


class TestCommands(CliTestCase):
    """Full command sequences against the tiny corpus."""

    def test_train_eval_and_exports(self):
        """train, eval, export-gates and export-weights all succeed."""
        code, _ = self.run_cli('train', '--config', self.config_path)
        self.assertEqual(code, settings.EXIT_OK)
        self.assertTrue(os.path.exists(os.path.join(self.out_dir, 'checkpoint.petw')))
        self.assertTrue(os.path.exists(os.path.join(self.out_dir, 'run_config.json')))

        code, output = self.run_cli('eval', '--config', self.config_path)
        self.assertEqual(code, settings.EXIT_OK)
        self.assertIn('eer=', output)
        self.assertIn('mindcf=', output)

        self.assertEqual(self.run_cli('export-gates', '--config', self.config_path)[0], settings.EXIT_OK)
        self.assertTrue(os.path.exists(os.path.join(self.out_dir, 'gates.csv')))
        self.assertEqual(self.run_cli('export-weights', '--config', self.config_path)[0], settings.EXIT_OK)
        self.assertTrue(os.path.exists(os.path.join(self.out_dir, 'layer_weights.csv')))

        scores = os.path.join(self.out_dir, 'scores.txt')
        trials = os.path.join(self.base_config.data.corpus_dir, 'trials.txt')
        code, rescored = self.run_cli('score', '--config', self.config_path, '--trials', trials, '--scores', scores)
        self.assertEqual(code, settings.EXIT_OK)
        self.assertAlmostEqual(self.eer(rescored), self.eer(output), delta=1e-5)

    @staticmethod
    def eer(output: str) -> float:
        fields = dict(part.split('=') for part in output.split())
        return float(fields['eer'])

    def test_resume_flag(self):
        """--stop-at then --resume completes the run."""
        code, _ = self.run_cli('train', '--config', self.config_path, '--stop-at', '1')
        self.assertEqual(code, settings.EXIT_OK)
        checkpoint = os.path.join(self.out_dir, 'checkpoint.petw')
        code, _ = self.run_cli('train', '--config', self.config_path, '--resume', checkpoint)
        self.assertEqual(code, settings.EXIT_OK)

    def test_count_params_at_full_scale(self):
        """The full preset reports the full-size table."""
        code, output = self.run_cli('count-params', '--config', 'preset:full', '--out', self.out_dir,
                                    '--methods', 'unipet', 'prompt')
        self.assertEqual(code, settings.EXIT_OK)
        self.assertIn('unipet trainable=5439781', output)
        self.assertIn('prompt trainable=276480', output)

    def test_seed_and_out_overrides(self):
        """--seed and --out replace the config values."""
        args = build_parser().parse_args(['train', '--config', self.config_path, '--seed', '7', '--out', 'elsewhere'])
        config = load_config(args)
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.output_dir, 'elsewhere')


class TestExitCodes(CliTestCase):
    """Lab errors map onto distinct exit codes."""

    def test_unknown_preset(self):
        """Configuration errors exit with 2."""
        self.assertEqual(self.run_cli('count-params', '--config', 'preset:huge')[0], settings.EXIT_CONFIG_ERROR)

    def test_missing_config_file(self):
        """A config path that does not exist is a configuration error."""
        missing = os.path.join(self.work_dir, 'nope.json')
        self.assertEqual(self.run_cli('train', '--config', missing)[0], settings.EXIT_CONFIG_ERROR)

    def test_invalid_sweep_value(self):
        """Untyped sweep values are configuration errors."""
        code, _ = self.run_cli('sweep', '--config', self.config_path, '--axis', 'bottleneck_dim', '--values', 'wide')
        self.assertEqual(code, settings.EXIT_CONFIG_ERROR)

    def test_numeric_abort(self):
        """A non-finite loss exits with 3."""
        with patch.object(TrainingManager, 'train', side_effect=NumericAbortError('loss became nan', step=4)):
            self.assertEqual(self.run_cli('train', '--config', self.config_path)[0], settings.EXIT_NUMERIC_ABORT)

    def test_other_failures(self):
        """Missing inputs exit with 1."""
        missing = os.path.join(self.work_dir, 'no_scores.txt')
        trials = os.path.join(self.base_config.data.corpus_dir, 'trials.txt')
        code, _ = self.run_cli('score', '--config', self.config_path, '--trials', trials, '--scores', missing)
        self.assertEqual(code, settings.EXIT_FAILURE)

    def test_unknown_command(self):
        """argparse rejects unknown sub-commands."""
        with patch('sys.stderr', new_callable=io.StringIO):
            with self.assertRaises(SystemExit):
                main(['fly'])


if __name__ == '__main__':
    unittest.main()
