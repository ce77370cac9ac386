"""Note-level F measures and frame-level accuracy."""


# Imports
from __future__ import annotations
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from lib.metrics.matching import MatchConfig, Matching, match_notes
from lib.midi.classes import MAX_PITCH, NoteList


def f_measure(matching: Matching, ref_count: int,
              est_count: int) -> Tuple[float, float, float]:
    """Precision, recall and F measure of a matching.

    Every ratio with a zero denominator is 0.
    """
    if ref_count < 0 or est_count < 0:
        raise ValueError('Note counts must not be negative')
    m = len(matching)
    precision = m / est_count if est_count else 0.0
    recall = m / ref_count if ref_count else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def frame_span(onset_s: float, offset_s: float, hop_s: float) -> Tuple[int, int]:
    """Frames ``[first, last)`` whose center lies in ``[onset, offset)``."""
    first = np.ceil(np.round(onset_s / hop_s - 0.5, 6))
    last = np.ceil(np.round(offset_s / hop_s - 0.5, 6))
    return max(int(first), 0), max(int(last), 0)


def piano_roll(notes: NoteList, hop_s: float, n_frames: int) -> np.ndarray:
    """Boolean ``(n_frames, 128)`` activity roll."""
    roll = np.zeros((n_frames, MAX_PITCH + 1), dtype=bool)
    for note in notes:
        first, last = frame_span(note.onset_s, note.offset_s, hop_s)
        roll[first:min(last, n_frames), note.pitch] = True
    return roll


def frame_accuracy(ref: NoteList, est: NoteList, hop_s: float,
                   duration_s: float) -> float:
    """Frame accuracy ``TP / (TP + FP + FN)`` over active roll cells.

    Parameters
    ----------
    ref : NoteList
        Reference notes.
    est : NoteList
        Estimated notes.
    hop_s : float
        Frame hop; frame ``k`` is centered at ``(k + 0.5) * hop_s``.
    duration_s : float
        Length covered by the rolls.

    Returns
    -------
    float
        Accuracy in [0, 1]; 0 when neither roll has an active cell.
    """
    if not duration_s > 0:
        raise ValueError(f'Duration must be positive: {duration_s}')
    n_frames = int(round(duration_s / hop_s))
    r = piano_roll(ref, hop_s, n_frames)
    e = piano_roll(est, hop_s, n_frames)
    tp = int(np.sum(r & e))
    errors = int(np.sum(r ^ e))
    return tp / (tp + errors) if tp + errors else 0.0


@dataclass(frozen=True)
class EvalReport:
    """Scores of one reference/estimate pair, or the mean of several.

    ``f`` and ``fn`` are the note-level F measures with and without the
    offset criterion; ``ac`` is the frame accuracy.
    """

    name: str
    f: float
    fn: float
    ac: float
    precision: float
    recall: float
    precision_no_offset: float
    recall_no_offset: float
    matched: float
    matched_no_offset: float
    ref_count: float
    est_count: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def mean(cls, reports: Sequence[EvalReport], name: str = 'mean'):
        """Arithmetic mean of every score over ``reports``."""
        if not reports:
            raise ValueError('Cannot average an empty set of reports')
        values = {
            fd.name: float(np.mean([getattr(r, fd.name) for r in reports]))
            for fd in fields(cls) if fd.name != 'name'
        }
        return cls(name=name, **values)


def evaluate_pair(ref: NoteList, est: NoteList,
                  cfg: MatchConfig = MatchConfig(), name: str = '',
                  duration_s: Optional[float] = None) -> EvalReport:
    """Score an estimate against its reference.

    The frame rolls cover ``duration_s``, by default the longer of the two
    note lists (at least one frame).
    """
    strict = match_notes(ref, est, cfg, with_offset=True)
    loose = match_notes(ref, est, cfg, with_offset=False)
    p, r, f = f_measure(strict, len(ref), len(est))
    pn, rn, fn = f_measure(loose, len(ref), len(est))
    if duration_s is None:
        duration_s = max(ref.duration_s, est.duration_s, cfg.frame_hop_s)
    ac = frame_accuracy(ref, est, cfg.frame_hop_s, duration_s)
    return EvalReport(
        name=name, f=f, fn=fn, ac=ac,
        precision=p, recall=r,
        precision_no_offset=pn, recall_no_offset=rn,
        matched=len(strict), matched_no_offset=len(loose),
        ref_count=len(ref), est_count=len(est),
    )
