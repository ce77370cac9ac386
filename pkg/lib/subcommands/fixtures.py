"""Write a toy sample bank and MIDI directory."""


# Imports
from argparse import ArgumentParser, Namespace
from pathlib import Path

import yaml

from lib import logger
from lib.audio.toybank import TOY_TIMBRES, write_fixtures
from lib.manifest import RunManifest


# Constants
CONFIG_FILE = 'config.yaml'
DEFAULT_TIMBRES = 3
DEFAULT_MIDI_FILES = 20


def init_argparse_parser(parser: ArgumentParser):
    parser.add_argument('--out', required=True, type=Path,
                        help='Output directory.')
    parser.add_argument('--seed', type=int, default=0, help='Master seed.')
    parser.add_argument(
        '--timbres',
        type=int,
        default=DEFAULT_TIMBRES,
        help=f'Toy timbres, 2..{len(TOY_TIMBRES)}. '
             f'Default={DEFAULT_TIMBRES}.',
    )
    parser.add_argument(
        '--midi-files',
        type=int,
        default=DEFAULT_MIDI_FILES,
        help=f'MIDI files per instrument group. '
             f'Default={DEFAULT_MIDI_FILES}.',
    )
    parser.set_defaults(run=run)


def run(argv: Namespace):
    """Write ``bank/``, ``midi/`` and a starter ``config.yaml``.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    out = Path(argv.out)
    bank, midi_dir = write_fixtures(out, argv.seed, argv.timbres,
                                    argv.midi_files)
    config = {
        'seed': argv.seed,
        'render': {
            'bank': str(bank.relative_to(out)),
            'midi_dir': str(midi_dir.relative_to(out)),
        },
    }
    with open(out / CONFIG_FILE, 'w') as fd:
        yaml.safe_dump(config, fd, sort_keys=False)

    manifest = RunManifest.create('fixtures', argv.seed, config)
    manifest.add(bank.relative_to(out), midi_dir.relative_to(out),
                 CONFIG_FILE)
    manifest.write(out)
    logger.info(f'Wrote fixtures and {CONFIG_FILE} to {out}.')
