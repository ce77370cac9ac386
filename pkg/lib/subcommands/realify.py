"""Turn audio into an unannotated real-domain directory."""


# Imports
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Tuple

from lib import logger
from lib.audio.realify import realify
from lib.audio.renderer import example_rng
from lib.audio.wav import read_wav, write_wav
from lib.manifest import RunManifest
from lib.subcommands.common import add_config_arguments, fan_out, run_config


def init_argparse_parser(parser: ArgumentParser):
    add_config_arguments(parser)
    parser.add_argument(
        '--source',
        type=Path,
        required=True,
        help='Directory searched recursively for WAV files, usually a '
             'rendered dataset.',
    )
    parser.set_defaults(run=run)


def run(argv: Namespace):
    """Corrupt every WAV file under ``--source`` into ``--out``.

    File ``i`` (in sorted order) uses the random stream of ``(seed, i)``.
    Annotations are not copied.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    cfg = run_config(argv)
    source: Path = argv.source
    if not source.is_dir():
        raise FileNotFoundError(f'Source directory not found: {source}')
    paths = sorted(source.rglob('*.wav'))
    if not paths:
        raise FileNotFoundError(f'No WAV files in {source}')
    out: Path = argv.out
    out.mkdir(parents=True, exist_ok=True)

    def corrupt(item: Tuple[int, Path]) -> str:
        index, path = item
        audio, params = realify(read_wav(path), example_rng(cfg.seed, index),
                                cfg.realify)
        target = out / path.relative_to(source)
        target.parent.mkdir(parents=True, exist_ok=True)
        write_wav(target, audio)
        logger.debug(f'Corrupted {path}: {params}')
        return str(target.relative_to(out))

    written = fan_out(corrupt, list(enumerate(paths)), cfg.threads)
    manifest = RunManifest.create('realify', cfg.seed, cfg.snapshot, paths)
    manifest.add(*written)
    manifest.write(out)
    logger.info(f'Wrote {len(written)} corrupted files to {out}.')
