"""One-to-one note matching between a reference and an estimate."""


# Imports
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import networkx as nx
import numpy as np

from lib import logger
from lib.midi.classes import NoteEvent, NoteList


# Constants
N_DECIMALS = 4


# Types
Matching = List[Tuple[int, int]]


@dataclass(frozen=True)
class MatchConfig:
    """Tolerances of the note and frame metrics.

    Attributes
    ----------
    onset_tol_s : float
        Largest onset error of a match.
    offset_tol_s : float
        Smallest offset tolerance.
    offset_ratio : float
        Offset tolerance as a fraction of the reference note length, used
        when larger than ``offset_tol_s``.
    frame_hop_s : float
        Frame hop of the piano rolls.
    """

    onset_tol_s: float = 0.05
    offset_tol_s: float = 0.05
    offset_ratio: float = 0.2
    frame_hop_s: float = 0.01

    def __post_init__(self):
        for name in ('onset_tol_s', 'offset_tol_s', 'frame_hop_s'):
            if not getattr(self, name) > 0:
                raise ValueError(f'{name} must be positive')
        if self.offset_ratio < 0:
            raise ValueError('offset_ratio must not be negative')

    def offset_tolerance(self, ref: NoteEvent) -> float:
        return max(self.offset_tol_s, self.offset_ratio * ref.duration_s)

    def to_dict(self) -> Dict[str, float]:
        return {
            'onset_tol_s': self.onset_tol_s,
            'offset_tol_s': self.offset_tol_s,
            'offset_ratio': self.offset_ratio,
            'frame_hop_s': self.frame_hop_s,
        }


def _distance(a: float, b: float) -> float:
    return float(np.round(abs(a - b), N_DECIMALS))


def candidate(ref: NoteEvent, est: NoteEvent, cfg: MatchConfig,
              with_offset: bool) -> bool:
    """Whether ``est`` may be matched to ``ref``."""
    if ref.pitch != est.pitch:
        return False
    if _distance(ref.onset_s, est.onset_s) > cfg.onset_tol_s:
        return False
    if with_offset:
        tolerance = cfg.offset_tolerance(ref)
        return _distance(ref.offset_s, est.offset_s) <= tolerance
    return True


def _by_pitch(notes: Sequence[NoteEvent]) -> Dict[int, List[int]]:
    buckets = defaultdict(list)
    for i, note in enumerate(notes):
        buckets[note.pitch].append(i)
    return buckets


def match_notes(ref: NoteList, est: NoteList, cfg: MatchConfig = MatchConfig(),
                with_offset: bool = False) -> Matching:
    """Maximum cardinality matching of estimated to reference notes.

    Candidates share a pitch and lie within the onset tolerance and, with
    ``with_offset``, the offset tolerance. Among maximum matchings the one
    with the smallest total onset error is returned.

    Parameters
    ----------
    ref : NoteList
        Reference notes.
    est : NoteList
        Estimated notes.
    cfg : MatchConfig
        Tolerances.
    with_offset : bool
        Also require offsets to agree.

    Returns
    -------
    Matching
        Sorted ``(ref index, est index)`` pairs.
    """
    est_buckets = _by_pitch(est.notes)
    matching: Matching = []
    for pitch, ref_ids in _by_pitch(ref.notes).items():
        g = nx.Graph()
        for i in ref_ids:
            for j in est_buckets.get(pitch, ()):
                if not candidate(ref[i], est[j], cfg, with_offset):
                    continue
                error = _distance(ref[i].onset_s, est[j].onset_s)
                g.add_edge(('ref', i), ('est', j),
                           weight=1.0 + cfg.onset_tol_s - error)
        for u, v in nx.max_weight_matching(g, maxcardinality=True):
            ends = dict((u, v))
            matching.append((ends['ref'], ends['est']))
    matching.sort()
    logger.debug(
        f'Matched {len(matching)} of {len(ref)} reference and {len(est)} '
        f'estimated notes (offsets: {with_offset}).'
    )
    return matching
