"""Toy fixtures: additive-synthesis one-shots and random melodies.

The generated directory holds everything the pipeline needs without
external datasets::

    <out>/bank/bank.json        sample bank manifest
    <out>/bank/<timbre>/<p>.wav one-shot per pitch
    <out>/midi/<group>_<k>.mid  monophonic melodies
"""


# Imports
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple
import json

import numpy as np

from lib import logger
from lib.audio.wav import SAMPLE_RATE, peak_normalize, write_wav
from lib.midi.classes import InstrumentGroup, NoteEvent, NoteList
from lib.midi.groups import GROUP_RANGES
from lib.midi.parser import write_smf


# Constants
LOW_PITCH = 48
HIGH_PITCH = 84
PITCH_STEP = 3
ONE_SHOT_S = 1.5


@dataclass(frozen=True)
class ToyTimbre:
    """Recipe for a synthetic timbre.

    Attributes
    ----------
    timbre_id : str
        Identifier.
    group : InstrumentGroup
        Instrument group.
    rolloff : float
        Harmonic k has amplitude ``k ** -rolloff``.
    harmonics : int
        Number of partials.
    decay_s : float
        Time constant of the exponential decay; 0 means sustained.
    attack_s : float
        Linear attack time.
    odd_only : bool
        Keep only odd partials.
    """

    timbre_id: str
    group: InstrumentGroup
    rolloff: float
    harmonics: int
    decay_s: float
    attack_s: float = 0.005
    odd_only: bool = False


TOY_TIMBRES: Tuple[ToyTimbre, ...] = (
    ToyTimbre('toy_piano', InstrumentGroup.KEYBOARD, 1.5, 12, 0.6),
    ToyTimbre('toy_epiano', InstrumentGroup.KEYBOARD, 2.5, 6, 0.9),
    ToyTimbre('toy_pluck', InstrumentGroup.GUITAR, 1.0, 16, 0.3),
    ToyTimbre('toy_flute', InstrumentGroup.FLUTE, 3.0, 4, 0.0, 0.05),
    ToyTimbre('toy_clarinet', InstrumentGroup.REED, 1.2, 9, 0.0, 0.03,
              odd_only=True),
)


def midi_frequency(pitch: int) -> float:
    """Equal-tempered frequency of a MIDI pitch, A4 = 440 Hz."""
    return 440.0 * 2.0 ** ((pitch - 69) / 12.0)


def one_shot(timbre: ToyTimbre, pitch: int, rng: np.random.Generator,
             duration_s: float = ONE_SHOT_S,
             sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Synthesize one note of a toy timbre."""
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    f0 = midi_frequency(pitch)
    out = np.zeros_like(t)
    step = 2 if timbre.odd_only else 1
    for k in range(1, timbre.harmonics * step + 1, step):
        if k * f0 >= sample_rate / 2:
            break
        phase = rng.uniform(0.0, 2.0 * np.pi)
        out += k ** -timbre.rolloff * np.sin(2.0 * np.pi * k * f0 * t + phase)
    envelope = np.minimum(t / timbre.attack_s, 1.0)
    if timbre.decay_s > 0:
        envelope *= np.exp(-t / timbre.decay_s)
    # Short fade so the sample ends at zero.
    fade = min(len(t), int(0.01 * sample_rate))
    envelope[len(t) - fade:] *= np.linspace(1.0, 0.0, fade)
    return peak_normalize(out * envelope)


def write_bank(directory: Path, rng: np.random.Generator,
               timbres: Sequence[ToyTimbre] = TOY_TIMBRES) -> Path:
    """Write toy one-shots and their manifest.

    Returns
    -------
    Path
        The ``bank.json`` manifest.
    """
    directory = Path(directory)
    manifest: Dict[str, Dict] = {}
    for timbre in timbres:
        pitches = {}
        for pitch in range(LOW_PITCH, HIGH_PITCH + 1, PITCH_STEP):
            rel = f'{timbre.timbre_id}/{pitch}.wav'
            write_wav(directory / rel, one_shot(timbre, pitch, rng))
            pitches[str(pitch)] = rel
        manifest[timbre.timbre_id] = {
            'group': timbre.group.value, 'pitches': pitches,
        }
    path = directory / 'bank.json'
    path.write_text(json.dumps(manifest, indent=2))
    logger.info(f'Wrote {len(timbres)} toy timbres to {directory}.')
    return path


def group_program(group: InstrumentGroup) -> int:
    """First program number of a group."""
    return min(lo for lo, _, g in GROUP_RANGES if g == group)


def random_melody(rng: np.random.Generator, length_s: float,
                  program: int) -> NoteList:
    """A monophonic random walk over pitches 48..84."""
    notes: List[NoteEvent] = []
    pitch = int(rng.integers(LOW_PITCH + 6, HIGH_PITCH - 6))
    t = float(rng.uniform(0.0, 0.3))
    while t < length_s:
        duration = float(rng.uniform(0.1, 0.6))
        velocity = int(rng.integers(40, 128))
        notes.append(NoteEvent(
            round(t, 3), pitch, round(t + duration, 3), velocity, program
        ))
        t += duration + float(rng.choice([0.0, 0.05, 0.1, 0.25]))
        pitch = int(np.clip(pitch + rng.integers(-5, 6), LOW_PITCH,
                            HIGH_PITCH))
    return NoteList.of(notes)


def write_midi(directory: Path, rng: np.random.Generator, per_group: int,
               groups: Sequence[InstrumentGroup],
               length_s: float = 20.0) -> List[Path]:
    """Write ``per_group`` random melodies for each group."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for group in groups:
        program = group_program(group)
        for k in range(per_group):
            path = directory / f'{group.value}_{k:03d}.mid'
            write_smf(path, [(program, random_melody(rng, length_s, program))])
            paths.append(path)
    logger.info(f'Wrote {len(paths)} toy MIDI files to {directory}.')
    return paths


def write_fixtures(directory: Path, seed: int, timbre_count: int,
                   per_group: int) -> Tuple[Path, Path]:
    """Write a toy bank and MIDI directory.

    Parameters
    ----------
    directory : Path
        Output directory.
    seed : int
        Master seed.
    timbre_count : int
        Number of toy timbres to use (at least 2).
    per_group : int
        Melodies per instrument group present in the bank.

    Returns
    -------
    Tuple[Path, Path]
        Bank manifest and MIDI directory.
    """
    if not 2 <= timbre_count <= len(TOY_TIMBRES):
        raise ValueError(
            f'Timbre count must be in 2..{len(TOY_TIMBRES)}: {timbre_count}'
        )
    rng = np.random.default_rng(seed)
    timbres = TOY_TIMBRES[:timbre_count]
    bank = write_bank(Path(directory) / 'bank', rng, timbres)
    groups = sorted({t.group for t in timbres}, key=lambda g: g.value)
    midi_dir = Path(directory) / 'midi'
    write_midi(midi_dir, rng, per_group, groups)
    return bank, midi_dir
