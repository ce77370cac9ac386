"""Note classes.

Classes implemented here are the note-level currency shared by parsing,
rendering, tokenization and evaluation.
"""


# Imports
from __future__ import annotations
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Tuple


# Constants
MIN_PITCH = 0
MAX_PITCH = 127
MIN_VELOCITY = 1
MAX_VELOCITY = 127
MIN_PROGRAM = 1
MAX_PROGRAM = 128
DEFAULT_VELOCITY = 100
DEFAULT_PROGRAM = 1


class InstrumentGroup(str, Enum):
    """Instrument groups used to pair one-shot timbres with MIDI tracks."""

    KEYBOARD = 'keyboard'
    MALLET = 'mallet'
    ORGAN = 'organ'
    GUITAR = 'guitar'
    BASS = 'bass'
    STRINGS = 'strings'
    BRASS = 'brass'
    REED = 'reed'
    FLUTE = 'flute'
    SYNTH_VOCAL = 'synth_vocal'


@dataclass(eq=True, frozen=True, order=True)
class NoteEvent:
    """A single note.

    Ordering is by (onset, pitch) first so sorted lists follow the NoteList
    invariant.

    Attributes
    ----------
    onset_s : float
        Onset time in seconds.
    pitch : int
        MIDI note number, 0..127.
    offset_s : float
        Offset time in seconds, strictly after the onset.
    velocity : int
        MIDI velocity, 1..127.
    program : int
        1-based MIDI program number, 1..128.
    """

    onset_s: float
    pitch: int
    offset_s: float
    velocity: int = DEFAULT_VELOCITY
    program: int = DEFAULT_PROGRAM

    def __post_init__(self):
        if not MIN_PITCH <= self.pitch <= MAX_PITCH:
            raise ValueError(f'Pitch out of range: {self.pitch}')
        if not MIN_VELOCITY <= self.velocity <= MAX_VELOCITY:
            raise ValueError(f'Velocity out of range: {self.velocity}')
        if not MIN_PROGRAM <= self.program <= MAX_PROGRAM:
            raise ValueError(f'Program out of range: {self.program}')
        if self.onset_s < 0:
            raise ValueError(f'Negative onset: {self.onset_s}')
        if not self.offset_s > self.onset_s:
            raise ValueError(
                f'Offset {self.offset_s} must follow onset {self.onset_s}'
            )

    @property
    def duration_s(self) -> float:
        """Note length in seconds."""
        return self.offset_s - self.onset_s

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON serializable representation."""
        return {
            'pitch': self.pitch,
            'onset_s': self.onset_s,
            'offset_s': self.offset_s,
            'velocity': self.velocity,
            'program': self.program,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> NoteEvent:
        """Create a note from its ``to_dict`` representation."""
        return cls(
            onset_s=float(d['onset_s']),
            pitch=int(d['pitch']),
            offset_s=float(d['offset_s']),
            velocity=int(d.get('velocity', DEFAULT_VELOCITY)),
            program=int(d.get('program', DEFAULT_PROGRAM)),
        )


@dataclass(frozen=True)
class NoteList:
    """An ordered note collection.

    Notes are sorted by (onset, pitch) on construction. The duration always
    covers the latest offset.

    Attributes
    ----------
    notes : Tuple[NoteEvent, ...]
        Sorted notes.
    duration_s : float
        Length of the material the notes belong to.
    """

    notes: Tuple[NoteEvent, ...] = ()
    duration_s: float = 0.0

    def __post_init__(self):
        notes = tuple(sorted(self.notes))
        object.__setattr__(self, 'notes', notes)
        latest = max((n.offset_s for n in notes), default=0.0)
        if self.duration_s < latest:
            object.__setattr__(self, 'duration_s', latest)

    def __iter__(self) -> Iterator[NoteEvent]:
        return iter(self.notes)

    def __len__(self) -> int:
        return len(self.notes)

    def __getitem__(self, idx: int) -> NoteEvent:
        return self.notes[idx]

    @classmethod
    def of(cls, notes: Iterable[NoteEvent], duration_s: float = 0.0):
        """Build a NoteList from any iterable of notes."""
        return cls(tuple(notes), duration_s)

    def pitches(self) -> FrozenSet[int]:
        """Return all pitches that occur in the list."""
        return frozenset(n.pitch for n in self.notes)

    def with_program(self, program: int) -> NoteList:
        """Return a copy where every note carries ``program``."""
        return NoteList(
            tuple(replace(n, program=program) for n in self.notes),
            self.duration_s,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON serializable representation."""
        return {
            'duration_s': self.duration_s,
            'notes': [n.to_dict() for n in self.notes],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> NoteList:
        """Create a NoteList from its ``to_dict`` representation."""
        return cls(
            tuple(NoteEvent.from_dict(n) for n in d.get('notes', [])),
            float(d.get('duration_s', 0.0)),
        )


@dataclass(frozen=True)
class SlicedNotes:
    """Notes of one window, rebased to window-local time.

    Attributes
    ----------
    notes : NoteList
        Window-local notes, truncated at the window end.
    held_over : FrozenSet[int]
        Pitches of notes that started before the window. Each such note
        starts at local time 0.
    continuing : FrozenSet[int]
        Pitches of notes that were truncated at the window end.
    """

    notes: NoteList = field(default_factory=NoteList)
    held_over: FrozenSet[int] = frozenset()
    continuing: FrozenSet[int] = frozenset()

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON serializable representation."""
        return {
            **self.notes.to_dict(),
            'held_over': sorted(self.held_over),
            'continuing': sorted(self.continuing),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> SlicedNotes:
        """Create a SlicedNotes from its ``to_dict`` representation."""
        return cls(
            NoteList.from_dict(d),
            frozenset(int(p) for p in d.get('held_over', [])),
            frozenset(int(p) for p in d.get('continuing', [])),
        )


# Types
Track = Tuple[int, NoteList]
TrackList = List[Track]
