"""
Test fixtures and factories for unit tests.

Provides:
- Note and note list builders
- In-memory sample banks and MIDI pools
- Tiny model configurations
- Small on-disk datasets for the composite tests
"""

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import json
import os

import numpy as np


# Slow tests train models or render many examples; opt in with
# SYNTHAMT_SLOW_TESTS=1.
SLOW_TESTS = os.environ.get('SYNTHAMT_SLOW_TESTS', '') == '1'


# ============================================================================
# NOTE FIXTURES
# ============================================================================

class NoteFixtures:
    """Factory for notes and note lists."""

    @staticmethod
    def note(onset: float, pitch: int, offset: float, velocity: int = 100,
             program: int = 1):
        from lib.midi.classes import NoteEvent
        return NoteEvent(onset, pitch, offset, velocity, program)

    @staticmethod
    def notes(*triples: Tuple[float, int, float], duration: float = 0.0):
        """NoteList from ``(onset, pitch, offset)`` triples."""
        from lib.midi.classes import NoteEvent, NoteList
        return NoteList.of(
            (NoteEvent(on, p, off) for on, p, off in triples), duration
        )

    @staticmethod
    def melody(rng: np.random.Generator, count: int = 12,
               length_s: float = 8.0, low: int = 55, high: int = 75):
        """Random monophonic-ish melody with distinct onsets."""
        from lib.midi.classes import NoteEvent, NoteList
        onsets = np.sort(rng.choice(int(length_s * 100) - 50, size=count,
                                    replace=False)) / 100.0
        notes = []
        for onset in onsets:
            dur = float(rng.uniform(0.1, 0.6))
            pitch = int(rng.integers(low, high + 1))
            notes.append(NoteEvent(float(onset), pitch, float(onset) + dur,
                                   int(rng.integers(40, 128))))
        return NoteList.of(notes, length_s)


# ============================================================================
# AUDIO FIXTURES
# ============================================================================

class AudioFixtures:
    """Factory for synthetic audio."""

    @staticmethod
    def sine(freq: float, seconds: float, sample_rate: int = 16000,
             amplitude: float = 0.5, decay_s: float = 0.0) -> np.ndarray:
        t = np.arange(int(round(seconds * sample_rate))) / sample_rate
        out = amplitude * np.sin(2 * np.pi * freq * t)
        if decay_s:
            out *= np.exp(-t / decay_s)
        return out.astype(np.float32)

    @staticmethod
    def midi_frequency(pitch: int) -> float:
        return 440.0 * 2.0 ** ((pitch - 69) / 12.0)


# ============================================================================
# SAMPLE BANK FIXTURES
# ============================================================================

class BankFixtures:
    """Factory for in-memory sample banks and MIDI pools."""

    PITCHES = (48, 60, 72)

    @staticmethod
    def arrays(pitches: Sequence[int] = PITCHES, seconds: float = 1.0,
               harmonics: int = 1, decay_s: float = 0.4) -> Dict[int, np.ndarray]:
        """Decaying harmonic tones per pitch."""
        out = {}
        for p in pitches:
            f0 = AudioFixtures.midi_frequency(p)
            tone = sum(
                AudioFixtures.sine(f0 * k, seconds, amplitude=0.5 / k,
                                   decay_s=decay_s)
                for k in range(1, harmonics + 1)
            )
            out[p] = np.asarray(tone, dtype=np.float32)
        return out

    @staticmethod
    def bank(groups: Optional[Dict[str, str]] = None,
             pitches: Sequence[int] = PITCHES):
        """Sample bank with one timbre per ``timbre_id => group`` entry.

        The default has two keyboard timbres and one flute timbre, so every
        drawn keyboard timbre has a mixing partner.
        """
        from lib.audio.sample_bank import SampleBank
        from lib.midi.classes import InstrumentGroup
        if groups is None:
            groups = {
                'sine_a': 'keyboard',
                'sine_b': 'keyboard',
                'sine_c': 'flute',
            }
        arrays = {}
        for k, (timbre_id, group) in enumerate(sorted(groups.items())):
            arrays[timbre_id] = (
                InstrumentGroup(group),
                BankFixtures.arrays(pitches, harmonics=k + 1),
            )
        return SampleBank.from_arrays(arrays)

    @staticmethod
    def keyboard_bank():
        """Two keyboard timbres only."""
        return BankFixtures.bank({'sine_a': 'keyboard', 'sine_b': 'keyboard'})

    @staticmethod
    def pool(seed: int = 0, tracks: int = 4, programs: Iterable[int] = (1,)):
        """MIDI pool of random melodies for each program."""
        from lib.midi.pool import MidiPool
        rng = np.random.default_rng(seed)
        entries = []
        for program in programs:
            for k in range(tracks):
                notes = NoteFixtures.melody(rng).with_program(program)
                entries.append((f'melody_{program}_{k}', program, notes))
        return MidiPool.of(entries)

    @staticmethod
    def write_manifest(directory: Path, bank_arrays: Dict[str, Tuple[str, Dict[int, np.ndarray]]]) -> Path:
        """Write WAV files and a bank manifest; returns the manifest path."""
        from lib.audio.wav import write_wav
        directory = Path(directory)
        manifest = {}
        for timbre_id, (group, pitches) in bank_arrays.items():
            entry = {'group': group, 'pitches': {}}
            for pitch, samples in pitches.items():
                rel = f'{timbre_id}/{pitch:03d}.wav'
                write_wav(directory / rel, samples)
                entry['pitches'][str(pitch)] = rel
            manifest[timbre_id] = entry
        path = directory / 'bank.json'
        path.write_text(json.dumps(manifest, indent=2))
        return path


# ============================================================================
# MODEL FIXTURES
# ============================================================================

class ModelFixtures:
    """Factory for tiny models."""

    @staticmethod
    def config(**overrides):
        """Tiny float64 architecture over 8 frames of 12 bins."""
        from lib.neural.model import ModelConfig
        params = dict(
            d_model=8, n_heads=2, d_ff=16, enc_layers=1, dec_layers=1,
            n_mels=12, n_frames=8, max_len=64, disc_window=3,
            disc_hidden=8, dtype='float64', seed=0,
        )
        params.update(overrides)
        return ModelConfig(**params)

    @staticmethod
    def audio_config(**overrides):
        """Tiny architecture over real 2.56 s log-mel segments."""
        from lib.neural.model import ModelConfig
        params = dict(
            d_model=8, n_heads=2, d_ff=16, enc_layers=1, dec_layers=1,
            n_mels=384, n_frames=256, max_len=32, disc_window=10,
            disc_hidden=8, dtype='float32', seed=0,
        )
        params.update(overrides)
        return ModelConfig(**params)

    @staticmethod
    def mels(rng: np.random.Generator, cfg, batch: int = 2) -> np.ndarray:
        return rng.standard_normal((batch, cfg.n_frames, cfg.n_mels))

    @staticmethod
    def token_seqs(count: int = 2) -> List:
        """Short, valid token sequences."""
        from lib.tokens.codec import encode
        seqs = []
        for k in range(count):
            notes = NoteFixtures.notes(
                (0.1 * (k + 1), 60 + k, 0.5), (0.3, 64, 0.9 + 0.1 * k)
            )
            seqs.append(encode(notes))
        return seqs


# ============================================================================
# DATASET FIXTURES
# ============================================================================

class DatasetFixtures:
    """Small datasets on disk, laid out as the render command writes them."""

    @staticmethod
    def render_dataset(directory: Path, count: int = 4, seed: int = 0,
                       pool=None, bank=None) -> Path:
        from lib.audio.renderer import (
            RenderConfig, example_rng, synth_example, write_example,
        )
        from lib.training.data import INDEX_FILE
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        pool = pool or BankFixtures.pool(seed)
        bank = bank or BankFixtures.keyboard_bank()
        cfg = RenderConfig(seed=seed)
        entries = [
            write_example(directory, i,
                          synth_example(pool, bank, cfg, example_rng(seed, i)))
            for i in range(count)
        ]
        (directory / INDEX_FILE).write_text(json.dumps({'examples': entries}))
        return directory

    @staticmethod
    def real_dir(directory: Path, count: int = 2, seconds: float = 3.0,
                 seed: int = 0) -> Path:
        """Noisy tones standing in for real-domain recordings."""
        from lib.audio.wav import write_wav
        directory = Path(directory)
        rng = np.random.default_rng(seed)
        for k in range(count):
            tone = AudioFixtures.sine(220.0 * (k + 1), seconds)
            noise = 0.05 * rng.standard_normal(len(tone))
            write_wav(directory / f'real_{k}.wav',
                      (tone + noise).astype(np.float32))
        return directory
