"""Standard MIDI File parser and writer.

Chunk framing is validated here so malformed files are reported with a byte
offset; event decoding is left to mido.
"""


# Imports
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple
import io
import struct

import mido

from lib import logger
from lib.midi.classes import (
    MAX_VELOCITY, MIN_VELOCITY, NoteEvent, NoteList, Track, TrackList,
)


# Constants
HEADER_ID = b'MThd'
TRACK_ID = b'MTrk'
CHUNK_HEADER_LEN = 8
HEADER_LEN = 6
PERCUSSION_CHANNEL = 9
DEFAULT_TEMPO_US = 500000
DEFAULT_TICKS_PER_BEAT = 480


class SmfParseError(ValueError):
    """Raised when SMF bytes are malformed."""

    def __init__(self, msg: str, offset: Optional[int] = None):
        """Create a new parse error.

        Parameters
        ----------
        msg : str
            Error message.
        offset : Optional[int]
            Byte offset of the failing chunk or field.
        """
        if offset is not None:
            msg = f'{msg} (at byte offset {offset})'
        super().__init__(msg)
        self.offset = offset


class SmfUnsupportedError(SmfParseError):
    """Raised for well-formed files this parser does not handle."""


@dataclass(frozen=True)
class Chunk:
    """A raw SMF chunk."""

    kind: bytes
    offset: int
    data: bytes


def _chunks(data: bytes) -> Iterator[Chunk]:
    """Split SMF bytes into chunks.

    Parameters
    ----------
    data : bytes
        Raw file content.

    Yields
    ------
    Chunk
        Every chunk in file order, header included.

    Raises
    ------
    SmfParseError
        Raised if a chunk header or body is truncated.
    """
    pos = 0
    while pos < len(data):
        if len(data) - pos < CHUNK_HEADER_LEN:
            raise SmfParseError('Truncated chunk header', pos)
        kind, length = struct.unpack_from('>4sI', data, pos)
        body_start = pos + CHUNK_HEADER_LEN
        if body_start + length > len(data):
            raise SmfParseError(
                f'Chunk {kind!r} declares {length} bytes but only '
                f'{len(data) - body_start} remain',
                pos,
            )
        yield Chunk(kind, pos, data[body_start:body_start + length])
        pos = body_start + length


def _validate(data: bytes) -> Tuple[int, int, List[Chunk]]:
    """Validate the SMF header and chunk framing.

    Returns
    -------
    Tuple[int, int, List[Chunk]]
        SMF format, ticks per beat and all track chunks.
    """
    if data[:4] != HEADER_ID:
        raise SmfParseError('Missing MThd header', 0)
    chunks = list(_chunks(data))
    header = chunks[0]
    if len(header.data) < HEADER_LEN:
        raise SmfParseError('Header chunk too short', header.offset)
    fmt, ntracks, division = struct.unpack_from('>HHH', header.data)
    if fmt == 2:
        raise SmfUnsupportedError('SMF type 2 is not supported', 8)
    if fmt not in (0, 1):
        raise SmfParseError(f'Unknown SMF format {fmt}', 8)
    if division & 0x8000:
        raise SmfUnsupportedError('SMPTE time division is not supported', 12)
    if division == 0:
        raise SmfParseError('Zero ticks per beat', 12)

    # Unknown chunk types are skipped.
    tracks = [c for c in chunks[1:] if c.kind == TRACK_ID]
    if len(tracks) != ntracks:
        logger.debug(
            f'Header declares {ntracks} tracks, found {len(tracks)}.'
        )
    return fmt, division, tracks


def _locate_error(division: int, tracks: Sequence[Chunk]) -> Optional[int]:
    """Find the offset of the first track chunk mido cannot decode."""
    for chunk in tracks:
        single = (
            HEADER_ID + struct.pack('>IHHH', HEADER_LEN, 0, 1, division)
            + TRACK_ID + struct.pack('>I', len(chunk.data)) + chunk.data
        )
        try:
            mido.MidiFile(file=io.BytesIO(single))
        except Exception:
            return chunk.offset
    return None


class TempoMap:
    """Piecewise tick to seconds conversion."""

    def __init__(self, changes: Sequence[Tuple[int, int]],
                 ticks_per_beat: int):
        """Build a tempo map.

        Parameters
        ----------
        changes : Sequence[Tuple[int, int]]
            ``(tick, microseconds per beat)`` tempo changes in any order.
            Later changes at the same tick win.
        ticks_per_beat : int
            Time division of the file.
        """
        by_tick: Dict[int, int] = {0: DEFAULT_TEMPO_US}
        for tick, tempo in sorted(changes, key=lambda c: c[0]):
            by_tick[tick] = tempo
        self.ticks = sorted(by_tick)
        self.tempos = [by_tick[t] for t in self.ticks]
        self.ticks_per_beat = ticks_per_beat

        # Seconds elapsed at each change.
        self.seconds = [0.0]
        for idx in range(1, len(self.ticks)):
            self.seconds.append(self.seconds[-1] + mido.tick2second(
                self.ticks[idx] - self.ticks[idx - 1],
                ticks_per_beat,
                self.tempos[idx - 1],
            ))

    def to_seconds(self, tick: int) -> float:
        """Convert an absolute tick to seconds."""
        idx = bisect_right(self.ticks, tick) - 1
        return self.seconds[idx] + mido.tick2second(
            tick - self.ticks[idx], self.ticks_per_beat, self.tempos[idx]
        )


def _track_notes(track: mido.MidiTrack,
                 tempo_map: TempoMap) -> Tuple[Dict[Tuple[int, int],
                                                   List[NoteEvent]], int]:
    """Collect notes of one track grouped by (channel, program).

    Returns
    -------
    Tuple[Dict[Tuple[int, int], List[NoteEvent]], int]
        Notes per (channel, 1-based program) and the track's final tick.
    """
    programs: Dict[int, int] = defaultdict(int)
    notes: Dict[Tuple[int, int], List[NoteEvent]] = defaultdict(list)

    # (channel, pitch) => (onset tick, velocity, program)
    open_notes: Dict[Tuple[int, int], Tuple[int, int, int]] = {}

    def close(channel: int, pitch: int, tick: int):
        onset_tick, velocity, program = open_notes.pop((channel, pitch))
        onset = tempo_map.to_seconds(onset_tick)
        offset = tempo_map.to_seconds(tick)
        if offset > onset:
            notes[(channel, program)].append(NoteEvent(
                onset_s=onset,
                pitch=pitch,
                offset_s=offset,
                velocity=min(max(velocity, MIN_VELOCITY), MAX_VELOCITY),
                program=program,
            ))

    tick = 0
    for msg in track:
        tick += msg.time
        if msg.type == 'program_change':
            programs[msg.channel] = msg.program
        elif msg.type not in ('note_on', 'note_off'):
            continue
        elif msg.channel == PERCUSSION_CHANNEL:
            continue
        elif msg.type == 'note_on' and msg.velocity > 0:
            key = (msg.channel, msg.note)
            # Overlapping same-pitch note closes the earlier one.
            if key in open_notes:
                close(msg.channel, msg.note, tick)
            open_notes[key] = (tick, msg.velocity, programs[msg.channel] + 1)
        elif (msg.channel, msg.note) in open_notes:
            close(msg.channel, msg.note, tick)

    # Notes without note-off end with the track.
    for channel, pitch in sorted(open_notes):
        close(channel, pitch, tick)

    return notes, tick


def parse_smf(data: bytes) -> TrackList:
    """Parse Standard MIDI File content into note lists.

    Parameters
    ----------
    data : bytes
        SMF type 0 or 1 content.

    Returns
    -------
    TrackList
        ``(program, NoteList)`` for every non-percussion track/channel (and
        program) that contains notes, ordered by track then channel. All
        times are in seconds after applying the tempo map.

    Raises
    ------
    SmfParseError
        Raised for malformed headers, chunks or events.
    SmfUnsupportedError
        Raised for SMF type 2 and SMPTE time division.
    """
    fmt, division, chunks = _validate(data)

    try:
        midi = mido.MidiFile(file=io.BytesIO(data))
    except Exception as e:
        raise SmfParseError(
            f'Undecodable track events: {e}', _locate_error(division, chunks)
        ) from e

    # Tempo changes apply globally in type 0 and type 1 files.
    changes = []
    for track in midi.tracks:
        tick = 0
        for msg in track:
            tick += msg.time
            if msg.type == 'set_tempo':
                changes.append((tick, msg.tempo))
    tempo_map = TempoMap(changes, midi.ticks_per_beat)

    per_track = [_track_notes(track, tempo_map) for track in midi.tracks]
    duration = max(
        (tempo_map.to_seconds(end) for _, end in per_track), default=0.0
    )

    result: TrackList = []
    for notes, _ in per_track:
        for (channel, program) in sorted(notes):
            result.append(
                (program, NoteList.of(notes[(channel, program)], duration))
            )
    logger.debug(
        f'Parsed SMF type {fmt} with {len(midi.tracks)} tracks into '
        f'{len(result)} note lists.'
    )
    return result


def read_smf(path: Path) -> TrackList:
    """Parse an SMF file from disk."""
    return parse_smf(Path(path).read_bytes())


def _channels() -> Iterator[int]:
    """Cycle through non-percussion channels."""
    while True:
        for channel in range(16):
            if channel != PERCUSSION_CHANNEL:
                yield channel


def serialize_smf(tracks: Sequence[Track],
                  ticks_per_beat: int = DEFAULT_TICKS_PER_BEAT,
                  tempo_us: int = DEFAULT_TEMPO_US) -> bytes:
    """Write note lists as a type 1 Standard MIDI File.

    Parameters
    ----------
    tracks : Sequence[Track]
        ``(program, NoteList)`` pairs. Each becomes one track on its own
        channel, skipping the percussion channel.
    ticks_per_beat : int
        Time division.
    tempo_us : int
        Constant tempo in microseconds per beat.

    Returns
    -------
    bytes
        SMF content.
    """
    midi = mido.MidiFile(type=1, ticks_per_beat=ticks_per_beat)
    meta = mido.MidiTrack()
    meta.append(mido.MetaMessage('set_tempo', tempo=tempo_us, time=0))
    midi.tracks.append(meta)

    def to_tick(seconds: float) -> int:
        return int(round(mido.second2tick(seconds, ticks_per_beat, tempo_us)))

    for (program, notes), channel in zip(tracks, _channels()):
        track = mido.MidiTrack()
        track.append(mido.Message(
            'program_change', channel=channel, program=program - 1, time=0
        ))

        # (tick, order, message); offs sort before ons at the same tick.
        events = []
        for note in notes:
            on, off = to_tick(note.onset_s), to_tick(note.offset_s)
            off = max(off, on + 1)
            events.append((on, 1, note.pitch, mido.Message(
                'note_on', channel=channel, note=note.pitch,
                velocity=note.velocity,
            )))
            events.append((off, 0, note.pitch, mido.Message(
                'note_off', channel=channel, note=note.pitch, velocity=0,
            )))
        events.sort(key=lambda e: e[:3])

        tick = 0
        for event_tick, _, _, msg in events:
            track.append(msg.copy(time=event_tick - tick))
            tick = event_tick
        midi.tracks.append(track)

    buffer = io.BytesIO()
    midi.save(file=buffer)
    return buffer.getvalue()


def write_smf(path: Path, tracks: Sequence[Track], **kwargs):
    """Serialize note lists to an SMF file on disk."""
    Path(path).write_bytes(serialize_smf(tracks, **kwargs))
