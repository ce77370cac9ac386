"""MIDI pools indexed by instrument group."""


# Imports
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

from lib import logger
from lib.midi.classes import InstrumentGroup, NoteList
from lib.midi.groups import program_to_group
from lib.midi.parser import SmfParseError, read_smf


# Constants
MIDI_SUFFIXES = ('.mid', '.midi')


@dataclass(frozen=True)
class PoolTrack:
    """A note list available for rendering.

    Attributes
    ----------
    source : str
        Identifier of the origin (file name and track index).
    program : int
        1-based program number.
    notes : NoteList
        Notes in absolute time.
    """

    source: str
    program: int
    notes: NoteList


@dataclass
class MidiPool:
    """Tracks grouped by instrument group."""

    tracks: Dict[InstrumentGroup, List[PoolTrack]] = field(
        default_factory=lambda: defaultdict(list)
    )

    def add(self, track: PoolTrack) -> bool:
        """Add a track if its program maps to a supported group.

        Returns
        -------
        bool
            True if the track was added.
        """
        group = program_to_group(track.program)
        if group is None or not len(track.notes):
            return False
        self.tracks[group].append(track)
        return True

    def for_group(self, group: InstrumentGroup) -> List[PoolTrack]:
        """Return the tracks of a group, in insertion order."""
        return list(self.tracks.get(group, ()))

    def __len__(self) -> int:
        return sum(len(t) for t in self.tracks.values())

    @classmethod
    def of(cls, tracks: Iterable[Tuple[str, int, NoteList]]) -> 'MidiPool':
        """Build a pool from ``(source, program, notes)`` triples."""
        pool = cls()
        for source, program, notes in tracks:
            pool.add(PoolTrack(source, program, notes))
        return pool


def load_midi_pool(directory: Path) -> MidiPool:
    """Parse every MIDI file in a directory tree.

    Unparseable files are logged and skipped.

    Parameters
    ----------
    directory : Path
        Directory searched recursively for ``*.mid`` and ``*.midi`` files.

    Returns
    -------
    MidiPool
        Pool of all supported tracks.
    """
    pool = MidiPool()
    paths = sorted(
        p for p in Path(directory).rglob('*')
        if p.suffix.lower() in MIDI_SUFFIXES
    )
    logger.info(f'Loading {len(paths)} MIDI files from {directory}.')
    for path in paths:
        try:
            tracks = read_smf(path)
        except SmfParseError as e:
            logger.warning(f'Skipping {path}: {e}')
            continue
        for idx, (program, notes) in enumerate(tracks):
            pool.add(PoolTrack(f'{path.name}#{idx}', program, notes))
    logger.info(f'MIDI pool holds {len(pool)} tracks.')
    return pool
