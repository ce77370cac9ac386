"""Encoding of window-local notes to tokens and back."""


# Imports
from __future__ import annotations
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from lib import logger
from lib.midi.classes import NoteEvent, NoteList, SlicedNotes
from lib.midi.slicing import join_slices
from lib.tokens.vocab import (
    BOS, END_TIE, EOS, N_TIMES, OFF, ON, TIME_STEP_S, TokenKind, Vocab,
)


# Constants
MAX_LEN = 512
SEGMENT_S = N_TIMES * TIME_STEP_S


class TokenOverflowError(ValueError):
    """Raised when a segment needs more than ``max_len`` tokens.

    Attributes
    ----------
    dropped : Tuple[NoteEvent, ...]
        Notes with at least one event beyond the cap.
    """

    def __init__(self, length: int, max_len: int,
                 dropped: Tuple[NoteEvent, ...]):
        super().__init__(
            f'Token sequence of length {length} exceeds {max_len}; '
            f'{len(dropped)} notes do not fit: '
            + ', '.join(f'{n.pitch}@{n.onset_s:.2f}' for n in dropped)
        )
        self.dropped = dropped


@dataclass(frozen=True)
class TokenSeq:
    """Token ids with their length cap."""

    ids: Tuple[int, ...]
    max_len: int = MAX_LEN

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def names(self) -> List[str]:
        return [Vocab.name(i) for i in self.ids]


@dataclass(frozen=True, order=True)
class QuantizedNote:
    """A note on the 10 ms grid.

    ``offset`` 256 is the segment end; such notes are continuing.
    """

    onset: int
    pitch: int
    offset: int
    held: bool = False

    @property
    def continuing(self) -> bool:
        return self.offset >= N_TIMES

    def to_note(self) -> NoteEvent:
        return NoteEvent(
            self.onset * TIME_STEP_S, self.pitch, self.offset * TIME_STEP_S
        )


@dataclass(frozen=True)
class QuantizedSegment:
    """Canonical grid form of a window; what a decode reproduces."""

    notes: Tuple[QuantizedNote, ...]

    @property
    def held_over(self) -> FrozenSet[int]:
        return frozenset(n.pitch for n in self.notes if n.held)

    @property
    def continuing(self) -> FrozenSet[int]:
        return frozenset(n.pitch for n in self.notes if n.continuing)

    def to_sliced(self) -> SlicedNotes:
        return SlicedNotes(
            NoteList.of((n.to_note() for n in self.notes), SEGMENT_S),
            self.held_over, self.continuing,
        )


@dataclass(frozen=True)
class DecodedSegment:
    """Result of decoding one segment.

    Attributes
    ----------
    notes : NoteList
        Segment-local notes.
    held_over : FrozenSet[int]
        Pitches opened in the tie section.
    continuing : FrozenSet[int]
        Pitches still open at the end, closed at the segment end.
    skipped : int
        Malformed tokens ignored while decoding.
    """

    notes: NoteList = field(default_factory=NoteList)
    held_over: FrozenSet[int] = frozenset()
    continuing: FrozenSet[int] = frozenset()
    skipped: int = 0


def to_bin(seconds: float) -> int:
    """Nearest 10 ms bin, ties to even."""
    return int(np.rint(seconds / TIME_STEP_S))


def quantize(notes: Iterable[NoteEvent],
             held_over: FrozenSet[int] = frozenset(),
             continuing: FrozenSet[int] = frozenset()) -> QuantizedSegment:
    """Snap window-local notes to the grid.

    Onsets go to ``0..255`` and offsets to ``onset+1..256``. The earliest
    note of a held-over pitch is held if it starts at bin 0; the latest note
    of a continuing pitch ends at 256. Same-pitch overlaps close the earlier
    note at the later onset, and a note sharing its onset bin with a later
    one of the same pitch is absorbed by it.

    Parameters
    ----------
    notes : Iterable[NoteEvent]
        Window-local notes.
    held_over : FrozenSet[int]
        Pitches carried into the window.
    continuing : FrozenSet[int]
        Pitches carried out of the window.

    Returns
    -------
    QuantizedSegment
        Grid notes sorted by (onset, pitch).
    """
    by_pitch: Dict[int, List[NoteEvent]] = defaultdict(list)
    for note in notes:
        by_pitch[note.pitch].append(note)

    result: List[QuantizedNote] = []
    for pitch, group in by_pitch.items():
        group.sort(key=lambda n: (n.onset_s, n.offset_s))
        latest = max(group, key=lambda n: n.offset_s)
        grid: List[QuantizedNote] = []
        for i, note in enumerate(group):
            onset = min(max(to_bin(note.onset_s), 0), N_TIMES - 1)
            if note is latest and pitch in continuing:
                offset = N_TIMES
            else:
                offset = min(max(to_bin(note.offset_s), onset + 1), N_TIMES)
            held = i == 0 and pitch in held_over and onset == 0
            grid.append(QuantizedNote(onset, pitch, offset, held))

        grid.sort(key=lambda n: (n.onset, n.offset))
        resolved: List[QuantizedNote] = []
        for note in grid:
            if resolved:
                prev = resolved[-1]
                if prev.onset == note.onset:
                    resolved.pop()
                    note = QuantizedNote(note.onset, pitch, note.offset,
                                         note.held or prev.held)
                elif prev.offset > note.onset:
                    resolved[-1] = QuantizedNote(prev.onset, pitch,
                                                 note.onset, prev.held)
            resolved.append(note)
        result.extend(resolved)

    return QuantizedSegment(tuple(sorted(result)))


def encode(notes: Iterable[NoteEvent],
           held_over: FrozenSet[int] = frozenset(),
           continuing: FrozenSet[int] = frozenset(),
           max_len: int = MAX_LEN) -> TokenSeq:
    """Encode window-local notes.

    Layout: BOS, held-over pitches ascending, END_TIE, then per time bin a
    time token, OFF and its pitches, ON and its pitches, and finally EOS.
    Continuing notes emit no OFF.

    Parameters
    ----------
    notes : Iterable[NoteEvent]
        Window-local notes.
    held_over : FrozenSet[int]
        Pitches carried into the window.
    continuing : FrozenSet[int]
        Pitches carried out of the window.
    max_len : int
        Length cap including BOS and EOS.

    Returns
    -------
    TokenSeq
        Complete token sequence.

    Raises
    ------
    TokenOverflowError
        Raised if the sequence exceeds ``max_len``.
    """
    segment = quantize(notes, held_over, continuing)

    ids: List[int] = [BOS]
    # Token index of each note's last event.
    last_event: Dict[QuantizedNote, int] = {}
    for note in sorted(segment.notes, key=lambda n: n.pitch):
        if note.held:
            ids.append(Vocab.pitch(note.pitch))
            last_event[note] = len(ids) - 1
    ids.append(END_TIE)

    offs: Dict[int, List[QuantizedNote]] = defaultdict(list)
    ons: Dict[int, List[QuantizedNote]] = defaultdict(list)
    for note in segment.notes:
        if not note.held:
            ons[note.onset].append(note)
        if not note.continuing:
            offs[note.offset].append(note)

    for t in sorted(set(offs) | set(ons)):
        ids.append(Vocab.time(t))
        for marker, events in ((OFF, offs[t]), (ON, ons[t])):
            if not events:
                continue
            ids.append(marker)
            for note in sorted(events, key=lambda n: n.pitch):
                ids.append(Vocab.pitch(note.pitch))
                last_event[note] = len(ids) - 1
    ids.append(EOS)

    if len(ids) > max_len:
        dropped = tuple(
            n.to_note() for n in segment.notes
            if last_event.get(n, len(ids)) >= max_len - 1
        )
        raise TokenOverflowError(len(ids), max_len, dropped)
    return TokenSeq(tuple(ids), max_len)


def encode_sliced(sliced: SlicedNotes, max_len: int = MAX_LEN) -> TokenSeq:
    return encode(sliced.notes, sliced.held_over, sliced.continuing, max_len)


class _Decoder:
    """Token state machine."""

    def __init__(self):
        self.time = 0
        self.mode: Optional[int] = None
        self.open: Dict[int, int] = {}
        self.held_over = set()
        self.notes: List[NoteEvent] = []
        self.skipped = 0

    def close(self, pitch: int, t: int):
        onset = self.open.pop(pitch)
        if t > onset:
            self.notes.append(NoteEvent(
                onset * TIME_STEP_S, pitch, t * TIME_STEP_S
            ))
        else:
            self.skipped += 1

    def tie(self, token: int):
        pitch = Vocab.value(token)
        if pitch in self.open:
            self.skipped += 1
            return
        self.open[pitch] = 0
        self.held_over.add(pitch)

    def event(self, token: int):
        kind = Vocab.kind(token)
        if kind == TokenKind.TIME:
            t = Vocab.value(token)
            if t < self.time:
                self.skipped += 1
            self.time = max(t, self.time)
            self.mode = None
        elif kind in (TokenKind.ON, TokenKind.OFF):
            self.mode = token
        elif kind != TokenKind.PITCH or self.mode is None:
            self.skipped += 1
        elif self.mode == ON:
            pitch = Vocab.value(token)
            if pitch in self.open:
                self.close(pitch, self.time)
            self.open[pitch] = self.time
        else:
            pitch = Vocab.value(token)
            if pitch in self.open:
                self.close(pitch, self.time)
            else:
                self.skipped += 1

    def finish(self) -> DecodedSegment:
        continuing = frozenset(self.open)
        for pitch in sorted(self.open):
            self.close(pitch, N_TIMES)
        return DecodedSegment(
            NoteList.of(self.notes, SEGMENT_S),
            frozenset(self.held_over), continuing, self.skipped,
        )


def decode(tokens: Sequence[int]) -> DecodedSegment:
    """Decode tokens into window-local notes.

    Never fails on malformed input: stray tokens, OFF for unopened pitches,
    pitches without a preceding marker and zero-length notes are skipped and
    counted; decreasing times are clamped to the running maximum. Tokens
    after EOS are ignored.

    Parameters
    ----------
    tokens : Sequence[int]
        Token ids, typically model output.

    Returns
    -------
    DecodedSegment
        Notes with tie information and the skipped token count.
    """
    ids = list(tokens)
    state = _Decoder()
    in_tie = True
    for i, token in enumerate(ids):
        try:
            kind = Vocab.kind(int(token))
        except ValueError:
            state.skipped += 1
            continue
        if kind == TokenKind.EOS:
            break
        if kind == TokenKind.BOS:
            if i != 0:
                state.skipped += 1
            continue
        if kind == TokenKind.END_TIE:
            if not in_tie:
                state.skipped += 1
            in_tie = False
            continue
        if in_tie:
            if kind == TokenKind.PITCH:
                state.tie(token)
                continue
            # Missing END_TIE.
            in_tie = False
            state.skipped += 1
        state.event(token)

    segment = state.finish()
    if segment.skipped:
        logger.debug(f'Skipped {segment.skipped} malformed tokens.')
    return segment


def join_segments(segments: Sequence[DecodedSegment],
                  starts: Sequence[float],
                  dur_s: float = SEGMENT_S) -> NoteList:
    """Stitch consecutive decoded segments into absolute time."""
    return join_slices(segments, starts, dur_s)
