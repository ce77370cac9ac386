"""MIDI support: note classes, SMF parsing, program groups and slicing."""


# Imports
from lib.midi.classes import (
    InstrumentGroup, NoteEvent, NoteList, SlicedNotes, Track, TrackList,
)
from lib.midi.groups import program_to_group
from lib.midi.parser import (
    SmfParseError, SmfUnsupportedError, parse_smf, read_smf, serialize_smf,
    write_smf,
)
from lib.midi.pool import MidiPool, PoolTrack, load_midi_pool
from lib.midi.slicing import join_slices, slice_notes, split_windows
