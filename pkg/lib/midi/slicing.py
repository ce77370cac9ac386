"""Window slicing and re-joining of note lists."""


# Imports
from dataclasses import replace
from typing import Dict, FrozenSet, List, Protocol, Sequence, Tuple

from lib.midi.classes import NoteEvent, NoteList, SlicedNotes


class SliceLike(Protocol):
    """Anything carrying window-local notes with tie information."""

    notes: NoteList
    held_over: FrozenSet[int]
    continuing: FrozenSet[int]


def slice_notes(notes: NoteList, start_s: float, dur_s: float) -> SlicedNotes:
    """Cut the notes intersecting ``[start_s, start_s + dur_s)``.

    Parameters
    ----------
    notes : NoteList
        Source notes in absolute time.
    start_s : float
        Window start in seconds.
    dur_s : float
        Window length in seconds.

    Returns
    -------
    SlicedNotes
        Window-local notes. Notes starting before the window start at 0 and
        are flagged held-over; notes ending after the window are truncated at
        ``dur_s`` and flagged continuing.
    """
    if dur_s <= 0:
        raise ValueError(f'Window length must be positive: {dur_s}')
    end_s = start_s + dur_s

    local: List[NoteEvent] = []
    held_over = set()
    continuing = set()
    for note in notes:
        if note.onset_s >= end_s or note.offset_s <= start_s:
            continue
        onset = max(note.onset_s, start_s) - start_s
        offset = min(note.offset_s, end_s) - start_s
        if note.onset_s < start_s:
            held_over.add(note.pitch)
            onset = 0.0
        if note.offset_s > end_s:
            continuing.add(note.pitch)
            offset = dur_s
        if offset <= onset:
            continue
        local.append(replace(note, onset_s=onset, offset_s=offset))

    return SlicedNotes(
        NoteList.of(local, dur_s),
        frozenset(held_over),
        frozenset(continuing),
    )


def held_over_note(sliced: SliceLike, pitch: int) -> NoteEvent:
    """Return the note of ``pitch`` carried into a window."""
    return min(n for n in sliced.notes if n.pitch == pitch)


def continuing_note(sliced: SliceLike, pitch: int) -> NoteEvent:
    """Return the note of ``pitch`` carried out of a window."""
    return max(
        (n for n in sliced.notes if n.pitch == pitch),
        key=lambda n: n.offset_s,
    )


def join_slices(slices: Sequence[SliceLike],
                starts: Sequence[float],
                dur_s: float) -> NoteList:
    """Re-join consecutive windows into one note list.

    A pitch continuing out of window k and held over into window k+1 merges
    into a single note. A continuing pitch that is not held over by the next
    window is closed at the boundary; chains still open after the last
    window close at its end.

    Parameters
    ----------
    slices : Sequence[SliceLike]
        Windows in chronological order.
    starts : Sequence[float]
        Absolute start time of each window.
    dur_s : float
        Window length in seconds.

    Returns
    -------
    NoteList
        Notes in absolute time.
    """
    if len(slices) != len(starts):
        raise ValueError('Every window needs a start time.')

    joined: List[NoteEvent] = []

    # Pitch => the note begun in an earlier window, in absolute time.
    pending: Dict[int, NoteEvent] = {}
    end_s = 0.0

    for sliced, start in zip(slices, starts):

        # Close chains the new window does not pick up.
        for pitch in sorted(set(pending) - set(sliced.held_over)):
            note = pending.pop(pitch)
            joined.append(replace(note, offset_s=max(start, end_s)))

        # Resolve which notes are tied in and out.
        tied_in: Dict[int, NoteEvent] = {
            p: held_over_note(sliced, p)
            for p in sliced.held_over
            if any(n.pitch == p for n in sliced.notes)
        }
        tied_out: Dict[int, NoteEvent] = {
            p: continuing_note(sliced, p)
            for p in sliced.continuing
            if any(n.pitch == p for n in sliced.notes)
        }

        for note in sliced.notes:
            onset = start + note.onset_s
            if tied_in.get(note.pitch) is note and note.pitch in pending:
                onset = pending.pop(note.pitch).onset_s
            absolute = replace(
                note, onset_s=onset, offset_s=start + note.offset_s
            )
            if tied_out.get(note.pitch) is note:
                pending[note.pitch] = absolute
            else:
                joined.append(absolute)

        end_s = start + dur_s

    # Close whatever is still open at the end of the last window.
    for pitch in sorted(pending):
        joined.append(replace(pending[pitch], offset_s=end_s))

    return NoteList.of(joined, end_s)


def window_starts(duration_s: float, dur_s: float) -> List[float]:
    """Start times of consecutive windows covering ``duration_s``."""
    count = max(1, -int(-duration_s // dur_s))
    return [k * dur_s for k in range(count)]


def split_windows(notes: NoteList, dur_s: float) -> Tuple[
        List[SlicedNotes], List[float]]:
    """Slice a note list into consecutive windows."""
    starts = window_starts(notes.duration_s, dur_s)
    return [slice_notes(notes, s, dur_s) for s in starts], starts
