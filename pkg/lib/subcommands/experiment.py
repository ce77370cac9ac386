"""Experiments CLI."""


# Imports
from argparse import ArgumentParser, Namespace, _SubParsersAction
from pathlib import Path

from lib.experiments import domain_gap
from lib.manifest import RunManifest
from lib.subcommands.common import add_config_arguments, run_config
from lib.training.steps import FinetuneMode


def init_argparse_action(action: _SubParsersAction):
    """Initialize the experiments argument parser.

    Parameters
    ----------
    action : _SubParsersAction
        Experiments argument parser.
    """
    domain_gap_parser = action.add_parser(
        'domain-gap',
        help='Measure classifier accuracy and corrupted-domain Fn before and '
             'after fine-tuning.',
    )
    init_domain_gap_parser(domain_gap_parser)


def init_domain_gap_parser(parser: ArgumentParser):
    add_config_arguments(parser)
    parser.add_argument(
        '--checkpoint',
        type=Path,
        required=True,
        help='Pre-trained checkpoint.',
    )
    parser.add_argument(
        '--modes',
        nargs='+',
        choices=[m.value for m in FinetuneMode],
        default=[m.value for m in FinetuneMode],
        help='Fine-tuning modes to compare. Default=all.',
    )
    parser.set_defaults(run=run_domain_gap)


def run_domain_gap(argv: Namespace):
    """Run the domain-gap experiment.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    cfg = run_config(argv)
    test_dir = cfg.require_path(
        Path(cfg.experiment.test_dir) if cfg.experiment.test_dir else None,
        'experiment.test_dir',
    )
    real_dir = cfg.require_path(
        Path(cfg.finetune.real_dir) if cfg.finetune.real_dir else None,
        'finetune.real_dir',
    )
    report = domain_gap.run(
        argv.checkpoint, argv.out, cfg.model, cfg.finetune, cfg.experiment,
        cfg.realify, cfg.match, cfg.seed, cfg.threads,
        [FinetuneMode(m) for m in argv.modes],
    )
    manifest = RunManifest.create(
        'experiment domain-gap', cfg.seed, cfg.snapshot,
        [argv.checkpoint, test_dir, real_dir,
         *(Path(d) for d in cfg.finetune.dataset_dirs)],
    )
    manifest.add(domain_gap.REPORT_FILE,
                 *(f'{mode}/last.ckpt' for mode in report.modes))
    manifest.write(argv.out)
