"""
petforge command line - one sub-command per harness operation.
"""
import argparse
import sys
from typing import List, Optional

from petforge.config import settings
from petforge.config.lab_config import LabConfig
from petforge.config.run_config import RunConfig
from petforge.core.errors import ConfigurationError, NumericAbortError
from petforge.data.repositories import ConfigRepository
from petforge.utils.logger import log_debug, log_error, log_exception, log_info

COMMANDS = ('gen-data', 'pretrain', 'train', 'eval', 'count-params', 'export-weights',
            'export-gates', 'sweep', 'score')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='petforge', description='PET lab for speaker verification')
    commands = parser.add_subparsers(dest='command', required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('--config', default=None,
                         help="run config JSON, or preset:<desk|tiny|full> (default: desk preset)")
        sub.add_argument('--seed', type=int, default=None, help='override the run seed')
        sub.add_argument('--out', default=None, help='override the output directory')
        return sub

    command('gen-data', 'synthesize the speaker corpus and trial list')
    command('pretrain', 'pseudo-pretrain the backbone and save its weights')

    train = command('train', 'train the configured method')
    train.add_argument('--resume', default=None, help='checkpoint to resume from')
    train.add_argument('--stop-at', type=int, default=None, help='stop before this step')

    evaluate = command('eval', 'score the trial list and report EER / minDCF')
    evaluate.add_argument('--checkpoint', default=None)
    evaluate.add_argument('--trials', default=None)
    evaluate.add_argument('--scores', default=None, help='where to write the score file')

    count = command('count-params', 'trainable parameter table per method')
    count.add_argument('--methods', nargs='*', default=None)

    weights = command('export-weights', 'softmax-normalized layer weights of a checkpoint')
    weights.add_argument('--checkpoint', default=None)

    gates = command('export-gates', 'mean gate values per family and layer')
    gates.add_argument('--checkpoint', default=None)

    sweep = command('sweep', 'train and evaluate one run per value of a method hyperparameter')
    sweep.add_argument('--axis', required=True)
    sweep.add_argument('--values', nargs='+', required=True)

    score = command('score', 'metrics from an existing score file')
    score.add_argument('--trials', required=True)
    score.add_argument('--scores', required=True)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    if args.config is None:
        config = RunConfig.preset('desk')
    elif args.config.startswith('preset:'):
        config = RunConfig.preset(args.config.split(':', 1)[1])
    else:
        config = ConfigRepository().load_run_config(args.config, validate=False)
    return config.with_overrides(seed=args.seed, output_dir=args.out).validate()


def run_command(args: argparse.Namespace) -> int:
    from petforge.core.lab import Lab
    from petforge.systems.sweep_manager import parse_value
    from petforge.systems.training_manager import CHECKPOINT

    lab = Lab(load_config(args))
    lab.save_config()
    checkpoint = getattr(args, 'checkpoint', None)

    if args.command == 'gen-data':
        lab.gen_data()
    elif args.command == 'pretrain':
        result = lab.pretrain_manager.pretrain()
        log_info(f"Backbone weights saved to {result.weights_path}")
    elif args.command == 'train':
        result = lab.training_manager.train(resume_from=args.resume, stop_at=args.stop_at)
        log_info(f"Trained to step {result.final_step}; checkpoint {result.checkpoint_path}")
    elif args.command == 'eval':
        trials = lab.data_manager.trials(args.trials) if args.trials else None
        result = lab.evaluation_manager.evaluate(checkpoint or lab.path(CHECKPOINT), trials, args.scores)
        print(result.summary())
    elif args.command == 'count-params':
        for row in lab.report_manager.report_params(args.methods):
            print(f"{row.method} trainable={row.trainable} fraction={row.fraction:.6f} backend={row.backend}")
    elif args.command == 'export-weights':
        lab.report_manager.export_layer_weights(checkpoint or lab.path(CHECKPOINT))
    elif args.command == 'export-gates':
        lab.evaluation_manager.export_gates(checkpoint or lab.path(CHECKPOINT))
    elif args.command == 'sweep':
        values = [parse_value(args.axis, raw) for raw in args.values]
        for row in lab.sweep_manager.sweep(args.axis, values):
            print(f"{args.axis}={row.value} eer={row.eer:.6f} mindcf={row.min_dcf:.6f}")
    elif args.command == 'score':
        print(lab.evaluation_manager.score_file(args.trials, args.scores).summary())
    return settings.EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, run and map lab errors to exit codes."""
    args = build_parser().parse_args(argv)
    lab_failed = False
    try:
        log_debug(f"petforge {args.command} (debug mode: {LabConfig.DEBUG_MODE})")
        return run_command(args)
    except ConfigurationError as e:
        lab_failed = True
        log_error(f"Configuration error: {e}")
        return settings.EXIT_CONFIG_ERROR
    except NumericAbortError as e:
        lab_failed = True
        log_error(f"Numeric abort at step {e.step}: {e}")
        return settings.EXIT_NUMERIC_ABORT
    except KeyboardInterrupt:
        lab_failed = True
        log_info("Interrupted by user (Ctrl+C)")
        return settings.EXIT_FAILURE
    except Exception as e:
        lab_failed = True
        log_exception(f"petforge {args.command} failed: {e}")
        if LabConfig.DEBUG_MODE:
            raise
        return settings.EXIT_FAILURE
    finally:
        log_debug(f"petforge {args.command} finished{' with errors' if lab_failed else ''}")


if __name__ == '__main__':
    sys.exit(main())
