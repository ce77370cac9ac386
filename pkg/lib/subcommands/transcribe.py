"""Transcribe audio files into MIDI files."""


# Imports
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import List

from lib import logger
from lib.audio.wav import read_wav
from lib.manifest import RunManifest
from lib.midi.classes import DEFAULT_PROGRAM
from lib.midi.parser import write_smf
from lib.subcommands.common import add_config_arguments, run_config
from lib.training.loop import load_model
from lib.transcription import transcribe_audio


# Constants
# 1 ms ticks at the default tempo, so 10 ms token times are exact.
TICKS_PER_BEAT = 500


def init_argparse_parser(parser: ArgumentParser):
    add_config_arguments(parser)
    parser.add_argument(
        '--checkpoint',
        type=Path,
        required=True,
        help='Model checkpoint.',
    )
    parser.add_argument(
        'inputs',
        type=Path,
        nargs='+',
        help='WAV files or directories searched recursively for WAV files.',
    )
    parser.set_defaults(run=run)


def audio_files(inputs: List[Path]) -> List[Path]:
    files = []
    for path in inputs:
        if path.is_dir():
            files.extend(sorted(path.rglob('*.wav')))
        else:
            files.append(path)
    return files


def run(argv: Namespace):
    """Write ``<stem>.mid`` for every input file.

    A file that cannot be read or transcribed is logged and skipped; the
    remaining files are still processed. Decoding threads come from the
    config, ``--threads`` overriding it.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    cfg = run_config(argv)
    model = load_model(argv.checkpoint)
    out: Path = argv.out
    out.mkdir(parents=True, exist_ok=True)

    files = audio_files(argv.inputs)
    written, failed = [], []
    for path in files:
        try:
            notes = transcribe_audio(model, read_wav(path), cfg.threads)
        except (OSError, ValueError) as e:
            logger.warning(f'Could not transcribe {path}: {e}')
            failed.append(path)
            continue
        target = out / f'{path.stem}.mid'
        write_smf(target, [(DEFAULT_PROGRAM, notes)],
                  ticks_per_beat=TICKS_PER_BEAT)
        written.append(target.name)
        logger.info(f'Transcribed {path} into {len(notes)} notes.')

    inputs = [argv.checkpoint, *(p for p in files if p not in failed)]
    if argv.config is not None:
        inputs.append(argv.config)
    manifest = RunManifest.create(
        'transcribe', cfg.seed,
        {**cfg.snapshot, 'checkpoint': str(argv.checkpoint)}, inputs,
    )
    manifest.add(*written)
    manifest.write(out)
    if failed:
        logger.warning(f'{len(failed)} of {len(files)} files failed.')
