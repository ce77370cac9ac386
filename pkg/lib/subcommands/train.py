"""Pre-train a transcription model."""


# Imports
from argparse import ArgumentParser, Namespace
from pathlib import Path

from lib.audio.sample_bank import SampleBank
from lib.manifest import RunManifest
from lib.subcommands.common import add_config_arguments, run_config
from lib.training.loop import open_source, run_pretraining


def init_argparse_parser(parser: ArgumentParser):
    add_config_arguments(parser)
    parser.add_argument(
        '--resume',
        type=Path,
        help='Checkpoint of an interrupted run with the same config.',
    )
    parser.set_defaults(run=run)


def run(argv: Namespace):
    """Run pre-training from rendered datasets or online rendering.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    cfg = run_config(argv)
    inputs = [Path(d) for d in cfg.train.dataset_dirs]
    if cfg.train.online:
        midi_dir = cfg.require_path(cfg.midi_dir, 'render.midi_dir')
        bank_path = cfg.require_path(cfg.bank, 'render.bank',
                                     directory=False)
        source = open_source(cfg.train, cfg.model, cfg.render,
                             SampleBank.from_manifest(bank_path), midi_dir)
        inputs = [midi_dir, bank_path.parent]
    else:
        for i, d in enumerate(inputs):
            cfg.require_path(d, f'train.dataset_dirs.{i}')
        source = open_source(cfg.train, cfg.model)
    if argv.resume is not None:
        inputs.append(argv.resume)

    result = run_pretraining(cfg.model, cfg.train, argv.out, cfg.seed,
                             source, argv.resume)
    manifest = RunManifest.create('train', cfg.seed, cfg.snapshot, inputs)
    manifest.add(*(p.relative_to(argv.out) for p in result.artifacts))
    manifest.write(argv.out)
