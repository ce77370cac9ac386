"""Fine-tune a pre-trained model by domain confusion or adaptation."""


# Imports
from argparse import ArgumentParser, Namespace
from pathlib import Path

from lib.config import ConfigError
from lib.manifest import RunManifest
from lib.subcommands.common import add_config_arguments, run_config
from lib.training.loop import run_finetuning
from lib.training.steps import FinetuneMode


def init_argparse_parser(parser: ArgumentParser):
    add_config_arguments(parser)
    parser.add_argument(
        '--checkpoint',
        type=Path,
        help='Pre-trained checkpoint to start from.',
    )
    parser.add_argument(
        '--mode',
        choices=[m.value for m in FinetuneMode],
        help='Adversarial target: confusion pushes the discriminator to 0.5, '
             'adaptation to 1.0. Overrides finetune.mode.',
    )
    parser.add_argument(
        '--resume',
        type=Path,
        help='Fine-tuning checkpoint of an interrupted run.',
    )
    parser.set_defaults(run=run)


def run(argv: Namespace):
    """Run adversarial fine-tuning.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    cfg = run_config(argv)
    if cfg.finetune.real_dir is None:
        raise ConfigError('fine-tuning needs an unannotated real audio '
                          'directory', 'finetune.real_dir')
    real_dir = cfg.require_path(Path(cfg.finetune.real_dir),
                                'finetune.real_dir')
    if argv.checkpoint is None and argv.resume is None:
        raise ConfigError('a pre-trained checkpoint is required',
                          '--checkpoint')
    inputs = [Path(d) for d in cfg.finetune.dataset_dirs]
    for i, d in enumerate(inputs):
        cfg.require_path(d, f'finetune.dataset_dirs.{i}')
    inputs += [real_dir, *(p for p in (argv.checkpoint, argv.resume) if p)]

    result = run_finetuning(cfg.model, cfg.finetune, argv.out,
                            argv.checkpoint, cfg.seed, argv.resume)
    manifest = RunManifest.create('finetune', cfg.seed, cfg.snapshot, inputs)
    manifest.add(*(p.relative_to(argv.out) for p in result.artifacts))
    manifest.write(argv.out)
