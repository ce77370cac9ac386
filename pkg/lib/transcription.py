"""Audio to notes with a trained model."""


# Imports
from typing import List, Sequence

import numpy as np

from lib import logger
from lib.audio.features import SEGMENT_SAMPLES, melspec, segment_audio
from lib.audio.renderer import SEGMENT_S
from lib.midi.classes import NoteList
from lib.neural.model import TranscriptionModel
from lib.tokens.codec import DecodedSegment, decode, join_segments


def transcribe_mels(model: TranscriptionModel, mels: Sequence[np.ndarray],
                    threads: int = 1) -> List[DecodedSegment]:
    """Greedy transcription of segment mels into decoded segments."""
    if not len(mels):
        return []
    return [decode(seq.ids)
            for seq in model.batch_transcribe(list(mels), threads=threads)]


def transcribe_audio(model: TranscriptionModel, samples: np.ndarray,
                     threads: int = 1) -> NoteList:
    """Transcribe audio of any length.

    The audio is cut into consecutive 2.56 s windows, the last one
    zero-padded; the decoded windows are joined over their boundaries.

    Parameters
    ----------
    model : TranscriptionModel
        Trained model.
    samples : np.ndarray
        Mono 16 kHz audio.
    threads : int
        Decoding threads.

    Returns
    -------
    NoteList
        Notes in absolute time, lasting as long as the audio.
    """
    windows = segment_audio(samples, SEGMENT_SAMPLES)
    logger.debug(f'Transcribing {len(windows)} segments.')
    segments = transcribe_mels(
        model, [melspec(w).frames for w in windows], threads
    )
    starts = [k * SEGMENT_S for k in range(len(segments))]
    joined = join_segments(segments, starts, SEGMENT_S)
    return NoteList(joined.notes, len(samples) / SEGMENT_SAMPLES * SEGMENT_S)
