"""Render a synthetic dataset."""


# Imports
from argparse import ArgumentParser, Namespace
from typing import Any, Dict
import json

from lib import logger
from lib.audio.renderer import example_rng, synth_example, write_example
from lib.audio.sample_bank import SampleBank
from lib.config import ConfigError
from lib.manifest import RunManifest
from lib.midi.pool import load_midi_pool
from lib.subcommands.common import add_config_arguments, fan_out, run_config
from lib.training.data import INDEX_FILE


def init_argparse_parser(parser: ArgumentParser):
    add_config_arguments(parser)
    parser.add_argument(
        '--examples',
        type=int,
        help='Number of examples. Overrides render.examples.',
    )
    parser.set_defaults(run=run)


def run(argv: Namespace):
    """Render ``N`` examples and their index.

    Example ``i`` is rendered from the random stream of ``(seed, i)``, so
    the dataset does not depend on the number of threads.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    cfg = run_config(argv)
    midi_dir = cfg.require_path(cfg.midi_dir, 'render.midi_dir')
    bank_path = cfg.require_path(cfg.bank, 'render.bank', directory=False)
    count = argv.examples if argv.examples is not None else cfg.examples

    pool = load_midi_pool(midi_dir)
    if not len(pool):
        raise ConfigError(f'MIDI pool {midi_dir} has no usable tracks',
                          'render.midi_dir')
    bank = SampleBank.from_manifest(bank_path)
    out = argv.out
    out.mkdir(parents=True, exist_ok=True)

    def render_one(index: int) -> Dict[str, Any]:
        example = synth_example(pool, bank, cfg.render,
                                example_rng(cfg.seed, index))
        return write_example(out, index, example)

    logger.info(f'Rendering {count} examples with {cfg.threads} threads.')
    entries = fan_out(render_one, range(count), cfg.threads)
    with open(out / INDEX_FILE, 'w') as fd:
        json.dump({'examples': entries}, fd, indent=2)

    manifest = RunManifest.create('render', cfg.seed, cfg.snapshot,
                                  [midi_dir, bank_path.parent])
    manifest.add(INDEX_FILE, *(e['audio'] for e in entries),
                 *(e['notes'] for e in entries))
    manifest.write(out)
    logger.info(f'Wrote {len(entries)} examples to {out}.')
