"""Score estimated notes against references."""


# Imports
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Dict, List, Optional
import json

from lib import logger
from lib.manifest import RunManifest
from lib.metrics.report import format_table, write_report
from lib.metrics.scores import EvalReport, evaluate_pair
from lib.midi.classes import NoteList, SlicedNotes
from lib.midi.parser import read_smf
from lib.midi.pool import MIDI_SUFFIXES
from lib.subcommands.common import fan_out, run_config


# Constants
NOTE_FILE_SUFFIXES = (*MIDI_SUFFIXES, '.json')


class NoPairsError(LookupError):
    """Raised when no file name appears in both directories."""


def init_argparse_parser(parser: ArgumentParser):
    parser.add_argument('--est', type=Path, required=True,
                        help='Directory of estimated MIDI files.')
    parser.add_argument('--ref', type=Path, required=True,
                        help='Directory of reference MIDI files or note '
                             'sidecars of a rendered dataset.')
    parser.add_argument('--out', type=Path,
                        help='JSON report file.')
    parser.add_argument('--config', type=Path,
                        help='Run config providing the evaluate section.')
    parser.add_argument('--threads', type=int,
                        help='Worker threads. Overrides the config.')
    parser.set_defaults(run=run)


def read_notes(path: Path) -> Optional[NoteList]:
    """All notes of a MIDI file or note sidecar, merged into one list.

    JSON files that are not note sidecars yield None.
    """
    if path.suffix.lower() == '.json':
        with open(path, 'r') as fd:
            content = json.load(fd)
        if not isinstance(content, dict) or 'notes' not in content:
            return None
        return SlicedNotes.from_dict(content).notes
    tracks = read_smf(path)
    return NoteList.of(
        (n for _, notes in tracks for n in notes),
        max((notes.duration_s for _, notes in tracks), default=0.0),
    )


def note_files(directory: Path) -> Dict[str, Path]:
    """Note files by stem; MIDI files win over JSON files of the same stem."""
    if not directory.is_dir():
        raise FileNotFoundError(f'Directory not found: {directory}')
    files: Dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        suffix = path.suffix.lower()
        if suffix not in NOTE_FILE_SUFFIXES:
            continue
        if suffix == '.json' and path.stem in files:
            continue
        files[path.stem] = path
    return files


def load_notes(directory: Path) -> Dict[str, NoteList]:
    notes = {k: read_notes(p) for k, p in note_files(directory).items()}
    return {k: v for k, v in notes.items() if v is not None}


def run(argv: Namespace):
    """Evaluate every file name present in both directories.

    Unpaired files are reported and left out of the mean.

    Parameters
    ----------
    argv : Namespace
        Namespace object from argparse. This must have all required arguments
        and parameters as configured by the CLI entrypoint.
    """
    cfg = run_config(argv)
    ests = load_notes(argv.est)
    refs = load_notes(argv.ref)
    names = sorted(set(ests) & set(refs))
    unpaired = {
        'est': sorted(set(ests) - set(refs)),
        'ref': sorted(set(refs) - set(ests)),
    }
    for side, missing in unpaired.items():
        if missing:
            logger.warning(
                f'{len(missing)} {side} files without a partner: '
                + ', '.join(missing)
            )
    if not names:
        raise NoPairsError(
            f'No file name appears in both {argv.est} and {argv.ref}'
        )

    def evaluate(name: str) -> EvalReport:
        return evaluate_pair(refs[name], ests[name], cfg.match, name)

    rows: List[EvalReport] = fan_out(evaluate, names, cfg.threads)
    print(format_table(rows))
    if argv.out is not None:
        write_report(rows, argv.out, unpaired)
        manifest = RunManifest.create(
            'evaluate', cfg.seed, cfg.snapshot, [argv.est, argv.ref]
        )
        manifest.add(argv.out.name)
        manifest.write(argv.out.parent)
        logger.info(f'Wrote report {argv.out}.')
