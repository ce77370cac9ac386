"""Sample-based rendering of note lists.

Random draws follow a fixed order so a seed fully determines the output:
timbre (main, sub, alpha), MIDI track index, window start(s), one release
time per rendered note, limiter coin, limiter threshold.
"""


# Imports
from __future__ import annotations
from dataclasses import dataclass, field
from math import log
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple
import json

import numpy as np

from lib import logger
from lib.audio.sample_bank import (
    MixedTimbre, SampleBank, draw_mixed_timbre, lookup,
)
from lib.audio.wav import SAMPLE_RATE, peak_normalize, write_wav
from lib.midi.classes import (
    InstrumentGroup, MAX_VELOCITY, MIN_VELOCITY, NoteEvent, NoteList,
    SlicedNotes,
)
from lib.midi.pool import MidiPool
from lib.midi.slicing import slice_notes


# Constants
SEGMENT_S = 2.56
WINDOW_RETRIES = 8
DEFAULT_RELEASE_RANGES: Dict[InstrumentGroup, Tuple[float, float]] = {
    InstrumentGroup.KEYBOARD: (0.1, 1.0),
    InstrumentGroup.ORGAN: (0.1, 1.0),
    InstrumentGroup.MALLET: (0.1, 1.0),
    InstrumentGroup.BRASS: (0.1, 1.0),
    InstrumentGroup.SYNTH_VOCAL: (0.1, 1.0),
    InstrumentGroup.STRINGS: (0.8, 1.0),
    InstrumentGroup.REED: (0.8, 1.0),
    InstrumentGroup.FLUTE: (0.8, 1.0),
    InstrumentGroup.GUITAR: (0.1, 0.5),
    InstrumentGroup.BASS: (0.1, 0.2),
}


class NoMatchingMidiError(LookupError):
    """Raised when the MIDI pool has no track for an instrument group."""

    def __init__(self, group: InstrumentGroup):
        super().__init__(
            f'No MIDI track in the pool maps to group {group.value}'
        )
        self.group = group


@dataclass(frozen=True)
class RenderConfig:
    """Rendering parameters.

    Attributes
    ----------
    sample_rate : int
        Output rate in Hz.
    release_ranges : Mapping[InstrumentGroup, Tuple[float, float]]
        Release time range in seconds per group.
    limit_prob : float
        Probability of applying the limiter.
    limit_range : Tuple[float, float]
        Range of the limiter threshold.
    segment_s : float
        Window length rendered by ``synth_example``.
    mix_timbres : bool
        If False, timbres are not mixed (alpha is forced to 0).
    seed : int
        Master seed.
    """

    sample_rate: int = SAMPLE_RATE
    release_ranges: Mapping[InstrumentGroup, Tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_RELEASE_RANGES)
    )
    limit_prob: float = 0.8
    limit_range: Tuple[float, float] = (0.5, 1.0)
    segment_s: float = SEGMENT_S
    mix_timbres: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.limit_prob <= 1.0:
            raise ValueError(f'limit_prob outside [0, 1]: {self.limit_prob}')
        lo, hi = self.limit_range
        if not 0.0 < lo <= hi <= 1.0:
            raise ValueError(f'limit_range outside (0, 1]: {self.limit_range}')
        for group, (lo, hi) in self.release_ranges.items():
            if not 0.0 <= lo <= hi:
                raise ValueError(f'Invalid release range for {group}')

    def release_range(self, group: InstrumentGroup) -> Tuple[float, float]:
        return self.release_ranges.get(group, DEFAULT_RELEASE_RANGES[group])

    @property
    def segment_samples(self) -> int:
        return int(round(self.segment_s * self.sample_rate))


@dataclass(eq=False)
class AudioBuffer:
    """Mono audio.

    Attributes
    ----------
    samples : np.ndarray
        Float32 samples.
    sample_rate : int
        Rate in Hz.
    """

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(eq=False)
class PlacedNote:
    """A rendered note and where it starts in the output."""

    start: int
    samples: np.ndarray
    release_s: float


@dataclass(eq=False)
class SynthExample:
    """An aligned synthetic audio segment and its annotation."""

    audio: AudioBuffer
    notes: SlicedNotes
    params: Dict[str, Any]


def velocity_amplitude(velocity: int) -> float:
    """Map a MIDI velocity to a linear amplitude.

    ``a = log(1 + v / 127) / log(2)``, increasing from about 0.0113 at v=1
    to exactly 1 at v=127.

    Raises
    ------
    ValueError
        Raised if the velocity is outside 1..127.
    """
    if not MIN_VELOCITY <= velocity <= MAX_VELOCITY:
        raise ValueError(f'Velocity out of range 1..127: {velocity}')
    if velocity == MAX_VELOCITY:
        return 1.0
    return log(1.0 + velocity / MAX_VELOCITY) / log(2.0)


def draw_release(group: InstrumentGroup, cfg: RenderConfig,
                 rng: np.random.Generator) -> float:
    """Draw a release time for a group."""
    lo, hi = cfg.release_range(group)
    return float(rng.uniform(lo, hi))


def shape_note(sample: np.ndarray, note_len: int, release_len: int,
               amplitude: float) -> np.ndarray:
    """Trim a one-shot to a note and append a faded release tail.

    Parameters
    ----------
    sample : np.ndarray
        One-shot samples.
    note_len : int
        Note length in samples.
    release_len : int
        Release length in samples.
    amplitude : float
        Linear gain.

    Returns
    -------
    np.ndarray
        Rendered note. When the note outlasts the sample, the whole sample
        is used and no tail is added.
    """
    if note_len >= len(sample):
        return (sample * amplitude).astype(np.float32)
    body = sample[:note_len]
    tail = sample[note_len:note_len + release_len]
    fade = 1.0 - np.arange(len(tail), dtype=np.float64) / max(release_len, 1)
    out = np.concatenate([body, tail * fade])
    return (out * amplitude).astype(np.float32)


def render_note(note: NoteEvent, timbre: MixedTimbre, cfg: RenderConfig,
                rng: np.random.Generator,
                origin_s: float = 0.0) -> PlacedNote:
    """Render one note.

    Parameters
    ----------
    note : NoteEvent
        Note to render.
    timbre : MixedTimbre
        Timbre providing the one-shot.
    cfg : RenderConfig
        Rendering parameters.
    rng : np.random.Generator
        Source of the release draw.
    origin_s : float
        Time subtracted from the note onset to place it in the output.

    Returns
    -------
    PlacedNote
        Samples and the output index of their first sample, which may be
        negative when the note starts before the origin.
    """
    release = draw_release(timbre.group, cfg, rng)
    sample = lookup(timbre, note.pitch).samples
    rate = cfg.sample_rate
    samples = shape_note(
        sample,
        int(round(note.duration_s * rate)),
        int(round(release * rate)),
        velocity_amplitude(note.velocity),
    )
    start = int(round((note.onset_s - origin_s) * rate))
    return PlacedNote(start, samples, release)


def overlay(placed: Sequence[PlacedNote], length: int) -> np.ndarray:
    """Sum placed notes into a buffer, cropping at both ends."""
    out = np.zeros(length, dtype=np.float64)
    for note in placed:
        lo = max(note.start, 0)
        hi = min(note.start + len(note.samples), length)
        if hi <= lo:
            continue
        out[lo:hi] += note.samples[lo - note.start:hi - note.start]
    return out


def mixdown(notes: Sequence[NoteEvent], timbre: MixedTimbre,
            cfg: RenderConfig, rng: np.random.Generator, length: int,
            origin_s: float = 0.0) -> Tuple[np.ndarray, List[float]]:
    """Render and sum notes before any normalization or limiting.

    Returns
    -------
    Tuple[np.ndarray, List[float]]
        Float64 buffer and the release time drawn for each note.
    """
    placed = [render_note(n, timbre, cfg, rng, origin_s) for n in notes]
    return overlay(placed, length), [p.release_s for p in placed]


def limit(buffer: np.ndarray, cfg: RenderConfig,
          rng: np.random.Generator) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Normalize and, at random, hard-limit a buffer.

    Both the coin and the threshold are always drawn.

    Returns
    -------
    Tuple[np.ndarray, Dict[str, Any]]
        Float32 output with peak 1 (unless silent) and the drawn values.
    """
    coin = float(rng.uniform())
    threshold = float(rng.uniform(*cfg.limit_range))
    limited = coin < cfg.limit_prob
    out = peak_normalize(buffer)
    if limited:
        out = peak_normalize(np.clip(out, -threshold, threshold))
    return out, {'limited': limited, 'threshold': threshold}


def render_segment(notes: NoteList, timbre: MixedTimbre, cfg: RenderConfig,
                   rng: np.random.Generator,
                   duration_s: Optional[float] = None) -> AudioBuffer:
    """Render a note list into a normalized, possibly limited buffer.

    Parameters
    ----------
    notes : NoteList
        Notes in segment time.
    timbre : MixedTimbre
        Timbre to render with.
    cfg : RenderConfig
        Rendering parameters.
    rng : np.random.Generator
        Random generator.
    duration_s : Optional[float]
        Output length; defaults to ``cfg.segment_s``.

    Returns
    -------
    AudioBuffer
        Rendered audio. Empty note lists give silence.
    """
    duration_s = cfg.segment_s if duration_s is None else duration_s
    length = int(round(duration_s * cfg.sample_rate))
    buffer, _ = mixdown(list(notes), timbre, cfg, rng, length)
    out, _ = limit(buffer, cfg, rng)
    return AudioBuffer(out, cfg.sample_rate)


def example_rng(seed: int, index: int) -> np.random.Generator:
    """Independent random stream for example ``index`` of a run."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def synth_example(pool: MidiPool, bank: SampleBank, cfg: RenderConfig,
                  rng: np.random.Generator) -> SynthExample:
    """Render one annotated synthetic segment.

    Parameters
    ----------
    pool : MidiPool
        MIDI tracks grouped by instrument group.
    bank : SampleBank
        One-shot samples.
    cfg : RenderConfig
        Rendering parameters.
    rng : np.random.Generator
        Random generator owned by this example.

    Returns
    -------
    SynthExample
        Audio of ``cfg.segment_s`` and its window-local annotation.

    Raises
    ------
    NoMatchingMidiError
        Raised if no track maps to the drawn timbre's group.
    """
    timbre = draw_mixed_timbre(bank, rng, mixing=cfg.mix_timbres)
    tracks = pool.for_group(timbre.group)
    if not tracks:
        raise NoMatchingMidiError(timbre.group)
    track = tracks[int(rng.integers(len(tracks)))]

    # Prefer a window with at least one note; silence is accepted after
    # the retries run out.
    span = max(track.notes.duration_s - cfg.segment_s, 0.0)
    for _ in range(WINDOW_RETRIES):
        start = float(rng.uniform(0.0, span)) if span > 0 else 0.0
        sliced = slice_notes(track.notes, start, cfg.segment_s)
        if len(sliced.notes):
            break

    # Render everything audible in the window, including earlier notes
    # whose release spills into it.
    _, longest_release = cfg.release_range(timbre.group)
    end = start + cfg.segment_s
    audible = [
        n for n in track.notes
        if n.onset_s < end and n.offset_s + longest_release > start
    ]
    buffer, releases = mixdown(
        audible, timbre, cfg, rng, cfg.segment_samples, origin_s=start
    )
    audio, limiter = limit(buffer, cfg, rng)

    params = {
        **timbre.describe(),
        'midi_source': track.source,
        'program': track.program,
        'window_start_s': start,
        'releases_s': releases,
        **limiter,
    }
    logger.debug(f'Rendered example: {params}')
    return SynthExample(AudioBuffer(audio, cfg.sample_rate), sliced, params)


def write_example(directory: Path, index: int,
                  example: SynthExample) -> Dict[str, Any]:
    """Store an example as a WAV file and a JSON sidecar.

    Parameters
    ----------
    directory : Path
        Dataset directory.
    index : int
        Example index, used for the file names.
    example : SynthExample
        Example to store.

    Returns
    -------
    Dict[str, Any]
        Index entry with the file names.
    """
    directory = Path(directory)
    stem = f'{index:06d}'
    write_wav(directory / f'{stem}.wav', example.audio.samples,
              example.audio.sample_rate)
    sidecar = {**example.notes.to_dict(), 'params': example.params}
    (directory / f'{stem}.json').write_text(json.dumps(sidecar, indent=2))
    return {'index': index, 'audio': f'{stem}.wav', 'notes': f'{stem}.json'}
