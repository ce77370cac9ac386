"""
Unit tests for composite components.

Composite components combine leaf pieces:
- SMF parsing, serialization and the MIDI pool
- Sample bank, renderer, features and the real-domain corruption
- Dataset stores, checkpoints and configs
- Training runs, transcription and the command line
"""

from pathlib import Path
import contextlib
import io
import json
import struct
import tempfile
import unittest

import numpy as np

from tests.unit.fixtures import SLOW_TESTS


def _tmpdir(case: unittest.TestCase) -> Path:
    tmp = tempfile.TemporaryDirectory()
    case.addCleanup(tmp.cleanup)
    return Path(tmp.name)


class TestSmfParsing(unittest.TestCase):
    """Test SMF parsing and serialization."""

    def _smf(self) -> bytes:
        import mido
        midi = mido.MidiFile(type=1, ticks_per_beat=480)
        midi.tracks.append(mido.MidiTrack([
            mido.MetaMessage('set_tempo', tempo=500000, time=0),
            mido.MetaMessage('set_tempo', tempo=250000, time=480),
        ]))
        midi.tracks.append(mido.MidiTrack([
            mido.Message('program_change', channel=0, program=24, time=0),
            mido.Message('note_on', channel=0, note=60, velocity=90, time=0),
            mido.Message('note_off', channel=0, note=60, velocity=0,
                         time=960),
            mido.Message('note_on', channel=9, note=36, velocity=90, time=0),
            mido.Message('note_off', channel=9, note=36, velocity=0,
                         time=100),
        ]))
        buffer = io.BytesIO()
        midi.save(file=buffer)
        return buffer.getvalue()

    def test_tempo_map_applied(self):
        from lib.midi.parser import parse_smf
        tracks = parse_smf(self._smf())
        self.assertEqual(len(tracks), 1)
        program, notes = tracks[0]
        self.assertEqual(program, 25)
        self.assertEqual(len(notes), 1)
        note = notes[0]
        self.assertEqual(note.pitch, 60)
        self.assertEqual(note.velocity, 90)
        self.assertAlmostEqual(note.onset_s, 0.0)
        # One beat at 120 bpm, one at 240 bpm.
        self.assertAlmostEqual(note.offset_s, 0.75)

    def test_percussion_only_file_has_no_tracks(self):
        import mido
        from lib.midi.parser import parse_smf
        midi = mido.MidiFile(type=0)
        midi.tracks.append(mido.MidiTrack([
            mido.Message('note_on', channel=9, note=38, velocity=100, time=0),
            mido.Message('note_off', channel=9, note=38, time=240),
        ]))
        buffer = io.BytesIO()
        midi.save(file=buffer)
        self.assertEqual(parse_smf(buffer.getvalue()), [])

    def test_serialize_round_trip(self):
        from lib.midi.parser import parse_smf, serialize_smf
        from tests.unit.fixtures import NoteFixtures
        notes = NoteFixtures.notes(
            (0.0, 60, 0.5), (0.5, 64, 1.25), (0.5, 67, 1.0)
        ).with_program(41)
        tracks = parse_smf(serialize_smf([(41, notes)]))
        self.assertEqual(len(tracks), 1)
        program, parsed = tracks[0]
        self.assertEqual(program, 41)
        self.assertEqual(parsed.pitches(), notes.pitches())
        for a, b in zip(parsed, notes):
            self.assertAlmostEqual(a.onset_s, b.onset_s, delta=2e-3)
            self.assertAlmostEqual(a.offset_s, b.offset_s, delta=2e-3)
            self.assertEqual(a.velocity, b.velocity)

    def test_type_2_is_unsupported(self):
        from lib.midi.parser import SmfUnsupportedError, parse_smf
        data = (b'MThd' + struct.pack('>IHHH', 6, 2, 1, 480)
                + b'MTrk' + struct.pack('>I', 4) + b'\x00\xff\x2f\x00')
        with self.assertRaises(SmfUnsupportedError):
            parse_smf(data)

    def test_smpte_division_is_unsupported(self):
        from lib.midi.parser import SmfUnsupportedError, parse_smf
        data = (b'MThd' + struct.pack('>IHHH', 6, 0, 1, 0xE728)
                + b'MTrk' + struct.pack('>I', 4) + b'\x00\xff\x2f\x00')
        with self.assertRaises(SmfUnsupportedError):
            parse_smf(data)

    def test_garbage_raises_parse_error(self):
        from lib.midi.parser import SmfParseError, parse_smf
        with self.assertRaises(SmfParseError):
            parse_smf(b'definitely not a midi file')

    def test_truncated_track_raises_parse_error(self):
        from lib.midi.parser import SmfParseError, parse_smf
        data = self._smf()
        with self.assertRaises(SmfParseError):
            parse_smf(data[:len(data) - 10])


class TestMidiPoolLoading(unittest.TestCase):
    """Test building the MIDI pool from a directory."""

    def test_broken_and_unsupported_files_are_skipped(self):
        from lib.midi.classes import InstrumentGroup
        from lib.midi.parser import write_smf
        from lib.midi.pool import load_midi_pool
        from tests.unit.fixtures import NoteFixtures
        tmp = _tmpdir(self)
        notes = NoteFixtures.notes((0.0, 60, 0.5), (0.5, 62, 1.0))
        write_smf(tmp / 'piano.mid', [(1, notes.with_program(1))])
        # Program 100 belongs to no supported group.
        write_smf(tmp / 'fx.mid', [(100, notes.with_program(100))])
        (tmp / 'broken.mid').write_bytes(b'MThd garbage')
        (tmp / 'readme.txt').write_text('not midi')

        pool = load_midi_pool(tmp)
        self.assertEqual(len(pool), 1)
        tracks = pool.for_group(InstrumentGroup.KEYBOARD)
        self.assertEqual(len(tracks), 1)
        self.assertTrue(tracks[0].source.startswith('piano.mid'))
        self.assertEqual(pool.for_group(InstrumentGroup.FLUTE), [])

    def test_empty_tracks_are_not_added(self):
        from lib.midi.classes import NoteList
        from lib.midi.pool import MidiPool
        pool = MidiPool.of([('empty', 1, NoteList((), 1.0))])
        self.assertEqual(len(pool), 0)


class TestSampleBank(unittest.TestCase):
    """Test sample bank lookup and timbre mixing."""

    def test_loud_input_is_normalized(self):
        from lib.audio.sample_bank import SampleBank
        from lib.midi.classes import InstrumentGroup
        loud = np.full(100, 3.0, dtype=np.float32)
        bank = SampleBank.from_arrays(
            {'loud': (InstrumentGroup.BASS, {40: loud})}
        )
        self.assertAlmostEqual(
            float(np.max(np.abs(bank['loud'].samples[40].samples))), 1.0,
            places=5,
        )

    def test_unknown_timbre(self):
        from lib.audio.sample_bank import BankResourceError
        from tests.unit.fixtures import BankFixtures
        with self.assertRaises((BankResourceError, KeyError)):
            BankFixtures.bank()['missing']

    def test_exact_pitch_without_mixing(self):
        from lib.audio.sample_bank import MixedTimbre
        from lib.audio.wav import peak_normalize
        from tests.unit.fixtures import BankFixtures
        bank = BankFixtures.bank()
        timbre = MixedTimbre(bank['sine_a'], bank['sine_b'], 0.0)
        shot = timbre.lookup(60)
        np.testing.assert_allclose(
            shot.samples, peak_normalize(bank['sine_a'].samples[60].samples),
            atol=1e-6,
        )
        self.assertEqual(shot.timbre_id, 'sine_a')

    def test_shifted_pitch_uses_nearest_sample(self):
        from lib.audio.sample_bank import MixedTimbre
        from tests.unit.fixtures import BankFixtures
        bank = BankFixtures.bank()
        timbre = MixedTimbre(bank['sine_a'], bank['sine_b'], 0.5)
        base = timbre.lookup(60)
        up = timbre.lookup(62)
        self.assertEqual(up.pitch, 62)
        self.assertLess(len(up.samples), len(base.samples))
        self.assertAlmostEqual(float(np.max(np.abs(up.samples))), 1.0,
                               places=5)
        self.assertIs(timbre.lookup(62), up)

    @staticmethod
    def _peak_frequency(samples: np.ndarray) -> float:
        """Frequency of the largest spectral peak, zero-padded."""
        body = samples[2000:-2000] * np.hanning(len(samples) - 4000)
        n = 2 ** 21
        return float(np.argmax(np.abs(np.fft.rfft(body, n=n)))) * 16000 / n

    def test_pitch_shift_frequency(self):
        from lib.audio.sample_bank import MixedTimbre, SampleBank
        from lib.midi.classes import InstrumentGroup
        from tests.unit.fixtures import AudioFixtures
        tone = AudioFixtures.sine(AudioFixtures.midi_frequency(60), 2.0)
        bank = SampleBank.from_arrays({
            name: (InstrumentGroup.KEYBOARD, {60: tone})
            for name in ('pure_a', 'pure_b')
        })
        timbre = MixedTimbre(bank['pure_a'], bank['pure_b'], 0.0)
        base = self._peak_frequency(timbre.lookup(60).samples)
        shifted = self._peak_frequency(timbre.lookup(62).samples)
        expected = base * 2.0 ** (2 / 12)
        self.assertLess(abs(1200 * np.log2(shifted / expected)), 1.0)

    def test_nearest_pitch_prefers_lower_on_ties(self):
        from lib.audio.sample_bank import nearest_pitch
        self.assertEqual(nearest_pitch((48, 60, 72), 54), 48)
        self.assertEqual(nearest_pitch((48, 60, 72), 55), 60)
        self.assertIsNone(nearest_pitch((), 60))

    def test_mix_is_peak_normalized(self):
        from lib.audio.sample_bank import mix
        from tests.unit.fixtures import BankFixtures
        bank = BankFixtures.bank()
        mixed = mix(bank['sine_a'].samples[48], bank['sine_b'].samples[48],
                    2.0)
        self.assertAlmostEqual(float(np.max(np.abs(mixed.samples))), 1.0,
                               places=5)
        with self.assertRaises(ValueError):
            mix(bank['sine_a'].samples[48], bank['sine_b'].samples[60], 1.0)
        with self.assertRaises(ValueError):
            mix(bank['sine_a'].samples[48], bank['sine_b'].samples[48], 2.5)

    def test_draw_never_pairs_a_timbre_with_itself(self):
        from lib.audio.sample_bank import draw_mixed_timbre
        from tests.unit.fixtures import BankFixtures
        bank = BankFixtures.bank()
        rng = np.random.default_rng(0)
        for _ in range(50):
            timbre = draw_mixed_timbre(bank, rng)
            self.assertNotEqual(timbre.main_id, timbre.sub_id)
            self.assertTrue(0.0 <= timbre.alpha <= 2.0)
        self.assertEqual(
            draw_mixed_timbre(bank, rng, mixing=False).alpha, 0.0
        )

    def test_single_timbre_bank_cannot_mix(self):
        from lib.audio.sample_bank import BankResourceError, draw_mixed_timbre
        from tests.unit.fixtures import BankFixtures
        bank = BankFixtures.bank({'solo': 'keyboard'})
        with self.assertRaises(BankResourceError):
            draw_mixed_timbre(bank, np.random.default_rng(0))

    def test_disjoint_pitches_cannot_mix(self):
        from lib.audio.sample_bank import (
            BankResourceError, SampleBank, draw_mixed_timbre,
        )
        from lib.midi.classes import InstrumentGroup
        from tests.unit.fixtures import BankFixtures
        bank = SampleBank.from_arrays({
            'low': (InstrumentGroup.KEYBOARD, BankFixtures.arrays((48,))),
            'high': (InstrumentGroup.KEYBOARD, BankFixtures.arrays((72,))),
        })
        self.assertEqual(bank.mixable_pairs(), [])
        with self.assertRaises(BankResourceError):
            draw_mixed_timbre(bank, np.random.default_rng(0))

    def test_manifest_loading(self):
        from lib.audio.sample_bank import SampleBank
        from lib.midi.classes import InstrumentGroup
        from tests.unit.fixtures import BankFixtures
        tmp = _tmpdir(self)
        path = BankFixtures.write_manifest(tmp, {
            'a': ('keyboard', BankFixtures.arrays()),
            'b': ('flute', BankFixtures.arrays((60,))),
        })
        bank = SampleBank.from_manifest(path)
        self.assertEqual(bank.timbre_ids(), ['a', 'b'])
        self.assertEqual(bank['a'].group, InstrumentGroup.KEYBOARD)
        self.assertEqual(bank['a'].pitches(), (48, 60, 72))
        self.assertEqual(bank.mixable_pairs(), [('a', 'b')])


class TestRenderer(unittest.TestCase):
    """Test segment rendering and synthetic examples."""

    def test_empty_notes_render_silence(self):
        from lib.audio.renderer import RenderConfig, render_segment
        from lib.audio.sample_bank import MixedTimbre
        from lib.midi.classes import NoteList
        from tests.unit.fixtures import BankFixtures
        bank = BankFixtures.keyboard_bank()
        cfg = RenderConfig()
        audio = render_segment(NoteList((), 0.0),
                               MixedTimbre(bank['sine_a'], bank['sine_b'], 1),
                               cfg, np.random.default_rng(0))
        self.assertEqual(len(audio.samples), cfg.segment_samples)
        self.assertEqual(float(np.max(np.abs(audio.samples))), 0.0)

    def test_segment_is_normalized(self):
        from lib.audio.renderer import RenderConfig, render_segment
        from lib.audio.sample_bank import MixedTimbre
        from tests.unit.fixtures import BankFixtures, NoteFixtures
        bank = BankFixtures.keyboard_bank()
        cfg = RenderConfig(limit_prob=0.0)
        notes = NoteFixtures.notes((0.1, 60, 0.8), (0.5, 64, 1.5))
        audio = render_segment(notes,
                               MixedTimbre(bank['sine_a'], bank['sine_b'], 1),
                               cfg, np.random.default_rng(0))
        self.assertEqual(audio.duration_s, cfg.segment_s)
        self.assertAlmostEqual(float(np.max(np.abs(audio.samples))), 1.0,
                               places=4)
        # Nothing sounds before the first onset.
        self.assertEqual(
            float(np.max(np.abs(audio.samples[:int(0.1 * 16000) - 1]))), 0.0
        )

    def test_example_is_deterministic(self):
        from lib.audio.renderer import RenderConfig, example_rng, synth_example
        from tests.unit.fixtures import BankFixtures
        pool, bank, cfg = (BankFixtures.pool(), BankFixtures.keyboard_bank(),
                           RenderConfig(seed=3))
        a = synth_example(pool, bank, cfg, example_rng(3, 7))
        b = synth_example(pool, bank, cfg, example_rng(3, 7))
        c = synth_example(pool, bank, cfg, example_rng(3, 8))
        np.testing.assert_array_equal(a.audio.samples, b.audio.samples)
        self.assertEqual(a.notes, b.notes)
        self.assertEqual(a.params, b.params)
        self.assertFalse(np.array_equal(a.audio.samples, c.audio.samples))

    def test_example_shape_and_annotation(self):
        from lib.audio.renderer import RenderConfig, example_rng, synth_example
        from tests.unit.fixtures import BankFixtures
        cfg = RenderConfig()
        ex = synth_example(BankFixtures.pool(), BankFixtures.keyboard_bank(),
                           cfg, example_rng(0, 0))
        self.assertEqual(len(ex.audio.samples), 40960)
        self.assertLessEqual(float(np.max(np.abs(ex.audio.samples))),
                             1.0 + 1e-6)
        self.assertGreater(len(ex.notes.notes), 0)
        for note in ex.notes.notes:
            self.assertGreaterEqual(note.onset_s, 0.0)
            self.assertLessEqual(note.offset_s, cfg.segment_s + 1e-9)
        for key in ('main', 'sub', 'alpha', 'midi_source', 'window_start_s'):
            self.assertIn(key, ex.params)

    def test_group_without_midi(self):
        from lib.audio.renderer import (
            NoMatchingMidiError, RenderConfig, synth_example,
        )
        from tests.unit.fixtures import BankFixtures
        bank = BankFixtures.bank({'f1': 'flute', 'f2': 'flute'})
        with self.assertRaises(NoMatchingMidiError):
            synth_example(BankFixtures.pool(), bank, RenderConfig(),
                          np.random.default_rng(0))

    def test_write_example(self):
        from lib.audio.renderer import (
            RenderConfig, example_rng, synth_example, write_example,
        )
        from lib.audio.wav import read_wav
        from lib.midi.classes import SlicedNotes
        from tests.unit.fixtures import BankFixtures
        tmp = _tmpdir(self)
        ex = synth_example(BankFixtures.pool(), BankFixtures.keyboard_bank(),
                           RenderConfig(), example_rng(0, 4))
        entry = write_example(tmp, 4, ex)
        self.assertEqual(entry, {'index': 4, 'audio': '000004.wav',
                                 'notes': '000004.json'})
        self.assertEqual(len(read_wav(tmp / entry['audio'])), 40960)
        sidecar = json.loads((tmp / entry['notes']).read_text())
        self.assertEqual(SlicedNotes.from_dict(sidecar), ex.notes)
        self.assertEqual(sidecar['params']['main'], ex.params['main'])

    def _long_timbre(self):
        """Keyboard timbre of 4 s samples."""
        from lib.audio.sample_bank import MixedTimbre, SampleBank
        from lib.midi.classes import InstrumentGroup
        from tests.unit.fixtures import BankFixtures
        bank = SampleBank.from_arrays({
            name: (InstrumentGroup.KEYBOARD,
                   BankFixtures.arrays(seconds=4.0, decay_s=2.0))
            for name in ('long_a', 'long_b')
        })
        return MixedTimbre(bank['long_a'], bank['long_b'], 0.5)

    def _fixed_release(self, seconds: float):
        from lib.audio.renderer import RenderConfig
        from lib.midi.classes import InstrumentGroup
        return RenderConfig(
            release_ranges={InstrumentGroup.KEYBOARD: (seconds, seconds)},
            limit_prob=0.0,
        )

    def test_shape_note_lengths(self):
        from lib.audio.renderer import shape_note
        sample = np.ones(64000, dtype=np.float32)
        # 0.1 s body and 0.2 s release.
        self.assertEqual(len(shape_note(sample, 1600, 3200, 1.0)), 4800)
        # A 5 s note keeps the whole 4 s sample.
        self.assertEqual(len(shape_note(sample, 80000, 3200, 1.0)), 64000)
        # The release is cut at the end of the sample.
        self.assertEqual(len(shape_note(sample, 62000, 3200, 1.0)), 64000)

    def test_release_fades_linearly(self):
        from lib.audio.renderer import shape_note
        shaped = shape_note(np.ones(1000, dtype=np.float32), 100, 400, 0.5)
        np.testing.assert_allclose(shaped[:100], 0.5)
        np.testing.assert_allclose(shaped[100:],
                                   0.5 * (1 - np.arange(400) / 400),
                                   rtol=1e-6)

    def test_render_note_lengths(self):
        from lib.audio.renderer import render_note
        from tests.unit.fixtures import NoteFixtures
        timbre = self._long_timbre()
        cfg = self._fixed_release(0.2)
        rng = np.random.default_rng(0)
        short = render_note(NoteFixtures.note(0.0, 60, 0.1), timbre, cfg, rng)
        self.assertEqual(len(short.samples), 4800)
        self.assertAlmostEqual(short.release_s, 0.2)
        long = render_note(NoteFixtures.note(0.0, 60, 5.0), timbre, cfg, rng)
        self.assertEqual(len(long.samples), 64000)

    def test_mixdown_is_linear(self):
        from lib.audio.renderer import mixdown
        from tests.unit.fixtures import NoteFixtures
        timbre = self._long_timbre()
        cfg = self._fixed_release(0.3)
        a = NoteFixtures.note(0.2, 60, 0.9, velocity=80)
        b = NoteFixtures.note(0.5, 72, 1.7, velocity=110)
        length = cfg.segment_samples

        def render(notes):
            buffer, _ = mixdown(notes, timbre, cfg,
                                np.random.default_rng(0), length)
            return buffer

        both = render([a, b])
        self.assertGreater(float(np.max(np.abs(both))), 0.0)
        np.testing.assert_allclose(both, render([a]) + render([b]),
                                   atol=1e-12)

    def test_energy_starts_at_the_onset(self):
        from lib.audio.renderer import RenderConfig, render_segment
        from tests.unit.fixtures import NoteFixtures
        cfg = RenderConfig(limit_prob=0.0)
        for onset in (0.5, 1.234):
            audio = render_segment(
                NoteFixtures.notes((onset, 60, onset + 0.4)),
                self._long_timbre(), cfg, np.random.default_rng(1),
            ).samples
            loud = np.flatnonzero(np.abs(audio) > 1e-3 * np.max(np.abs(audio)))
            self.assertLessEqual(abs(loud[0] / 16000 - onset), 0.01)


class TestMelFeatures(unittest.TestCase):
    """Test log-mel feature extraction."""

    def test_shape_and_floor(self):
        from lib.audio.features import LOG_FLOOR, melspec
        mel = melspec(np.zeros(40960, dtype=np.float32))
        self.assertEqual(mel.frames.shape, (256, 384))
        self.assertEqual(mel.frames.dtype, np.float32)
        np.testing.assert_allclose(mel.frames, np.log(LOG_FLOOR), rtol=1e-6)

    def test_sine_peaks_near_its_frequency(self):
        from lib.audio.features import mel_center_frequencies, melspec
        from tests.unit.fixtures import AudioFixtures
        mel = melspec(AudioFixtures.sine(440.0, 2.56))
        peak = int(np.argmax(mel.frames.mean(axis=0)))
        self.assertAlmostEqual(mel_center_frequencies()[peak], 440.0,
                               delta=44.0)

    def test_scaling_shifts_log_mel(self):
        from lib.audio.features import LOG_FLOOR, melspec
        x = np.random.default_rng(0).normal(0, 0.1, 40960).astype(np.float32)
        base = melspec(x).frames
        for c in (0.25, 4.0):
            scaled = melspec((c * x).astype(np.float32)).frames
            # The filterbank sees magnitudes, so the shift is log c.
            above = np.minimum(base, scaled) > np.log(LOG_FLOOR) + 1.0
            self.assertGreater(above.mean(), 0.9)
            np.testing.assert_allclose(scaled[above],
                                       base[above] + np.log(c), atol=1e-3)

    def test_impulse_lights_its_frame(self):
        from lib.audio.features import LOG_FLOOR, melspec
        for n in (16030, 160 * 40):
            x = np.zeros(40960, dtype=np.float32)
            x[n] = 1.0
            frames = melspec(x).frames
            self.assertEqual(int(np.argmax(frames.mean(axis=1))), n // 160)
            # Frames whose 2048-sample window misses the impulse stay floored.
            reach = np.abs(n - 160 * np.arange(256)) >= 1024
            np.testing.assert_allclose(frames[reach], np.log(LOG_FLOOR),
                                       rtol=1e-6)

    def test_wrong_length(self):
        from lib.audio.features import melspec
        with self.assertRaises(ValueError):
            melspec(np.zeros(16000, dtype=np.float32))

    def test_segment_audio_pads_last_window(self):
        from lib.audio.features import segment_audio
        windows = segment_audio(np.ones(40961, dtype=np.float32))
        self.assertEqual(len(windows), 2)
        self.assertEqual(float(windows[1][0]), 1.0)
        self.assertEqual(float(windows[1][1:].sum()), 0.0)
        self.assertEqual(len(segment_audio(np.zeros(0))), 1)

    def test_dump_npy(self):
        from lib.audio.features import dump_npy, melspec
        from tests.unit.fixtures import AudioFixtures
        tmp = _tmpdir(self)
        mel = melspec(AudioFixtures.sine(220.0, 2.56))
        dump_npy(mel, tmp / 'mel.npy')
        loaded = np.load(tmp / 'mel.npy')
        self.assertEqual(loaded.dtype, np.dtype('<f4'))
        np.testing.assert_array_equal(loaded, mel.frames)


class TestRealify(unittest.TestCase):
    """Test the real-domain corruption chain."""

    def test_length_range_and_determinism(self):
        from lib.audio.realify import RealifyConfig, realify
        from tests.unit.fixtures import AudioFixtures
        tone = AudioFixtures.sine(330.0, 1.0)
        cfg = RealifyConfig()
        a, params = realify(tone, np.random.default_rng(1), cfg)
        b, _ = realify(tone, np.random.default_rng(1), cfg)
        self.assertEqual(len(a), len(tone))
        self.assertAlmostEqual(float(np.max(np.abs(a))), 1.0, places=5)
        np.testing.assert_array_equal(a, b)
        self.assertTrue(cfg.cutoff_hz[0] <= params['cutoff_hz']
                        <= cfg.cutoff_hz[1])
        self.assertTrue(cfg.snr_db[0] <= params['snr_db'] <= cfg.snr_db[1])
        self.assertFalse(np.allclose(a, tone))


class TestExampleStores(unittest.TestCase):
    """Test dataset and real-audio stores."""

    def test_store_reads_rendered_dataset(self):
        from lib.training.data import ExampleStore
        from tests.unit.fixtures import DatasetFixtures
        directory = DatasetFixtures.render_dataset(_tmpdir(self), count=3)
        store = ExampleStore(directory, max_len=512)
        self.assertEqual(len(store), 3)
        mel, tokens = store[1]
        self.assertEqual(mel.shape, (256, 384))
        self.assertIs(store.mel(1), mel)
        self.assertLessEqual(len(tokens), 512)
        self.assertGreater(len(store.notes(1).notes), 0)

    def test_overflowing_examples_are_skipped(self):
        from lib.training.data import ExampleStore
        from tests.unit.fixtures import DatasetFixtures
        directory = DatasetFixtures.render_dataset(_tmpdir(self), count=3)
        self.assertEqual(len(ExampleStore(directory, max_len=5)), 0)

    def test_missing_index(self):
        from lib.training.data import ExampleStore
        with self.assertRaises(FileNotFoundError):
            ExampleStore(_tmpdir(self))

    def test_multi_store_draws_from_every_dataset(self):
        from lib.training.data import ExampleStore, MultiStore
        from tests.unit.fixtures import DatasetFixtures
        tmp = _tmpdir(self)
        a = ExampleStore(DatasetFixtures.render_dataset(tmp / 'a', 2, seed=0))
        b = ExampleStore(DatasetFixtures.render_dataset(tmp / 'b', 2, seed=1))
        store = MultiStore([a, b])
        self.assertEqual(len(store), 4)
        drawn = store.draw(np.random.default_rng(0), 5)
        self.assertEqual(len(drawn), 5)
        with self.assertRaises(ValueError):
            MultiStore([])

    def test_real_audio_windows(self):
        from lib.training.data import RealAudioStore
        from tests.unit.fixtures import DatasetFixtures
        tmp = _tmpdir(self)
        store = RealAudioStore(DatasetFixtures.real_dir(tmp, count=2,
                                                        seconds=1.0))
        self.assertEqual(len(store), 2)
        mels = store.draw(np.random.default_rng(0), 3)
        self.assertEqual(mels.shape, (3, 256, 384))
        with self.assertRaises(FileNotFoundError):
            RealAudioStore(tmp / 'missing')
        (tmp / 'empty').mkdir()
        with self.assertRaises(FileNotFoundError):
            RealAudioStore(tmp / 'empty')

    def test_synth_stream_is_indexed(self):
        from lib.audio.renderer import RenderConfig, example_rng, synth_example
        from lib.audio.features import melspec
        from lib.training.data import SynthStream
        from tests.unit.fixtures import BankFixtures
        pool, bank, cfg = (BankFixtures.pool(), BankFixtures.keyboard_bank(),
                           RenderConfig(seed=2))
        stream = SynthStream(pool, bank, cfg, max_len=512, capacity=2)
        stream.seek(5)
        with stream:
            mel, _ = stream.get()
            index = stream.last_index
            with self.assertRaises(RuntimeError):
                stream.seek(0)
        expected = synth_example(pool, bank, cfg, example_rng(2, index))
        np.testing.assert_array_equal(
            mel, melspec(expected.audio.samples).frames
        )
        self.assertGreaterEqual(index, 5)


class TestCheckpointFormat(unittest.TestCase):
    """Test the checkpoint container."""

    def _checkpoint(self):
        from lib.neural.checkpoint import Checkpoint
        return Checkpoint(
            {'step': 3, 'model': {'d_model': 8, 'dtype': 'float64'}},
            {'model.w': np.arange(6, dtype=np.float32).reshape(2, 3),
             'adam.m': np.ones(4, dtype=np.float32)},
        )

    def test_dumps_loads(self):
        from lib.neural.checkpoint import dumps, loads
        ckpt = loads(dumps(self._checkpoint()))
        self.assertEqual(ckpt.meta['step'], 3)
        np.testing.assert_array_equal(
            ckpt.tensors['model.w'], np.arange(6).reshape(2, 3)
        )
        self.assertEqual(set(ckpt.section('model')), {'w'})

    def test_bad_magic(self):
        from lib.neural.checkpoint import CheckpointError, dumps, loads
        data = dumps(self._checkpoint())
        with self.assertRaises(CheckpointError):
            loads(b'NOTACKPT' + data[8:])

    def test_unknown_version(self):
        from lib.neural.checkpoint import (
            MAGIC, VERSION, CheckpointVersionError, dumps, loads,
        )
        data = dumps(self._checkpoint())
        data = MAGIC + struct.pack('<I', VERSION + 1) + data[len(MAGIC) + 4:]
        with self.assertRaises(CheckpointVersionError):
            loads(data)

    def test_truncation(self):
        from lib.neural.checkpoint import CheckpointError, dumps, loads
        data = dumps(self._checkpoint())
        for cut in (12, 20, len(data) - 3):
            with self.assertRaises(CheckpointError):
                loads(data[:cut])

    def test_missing_file(self):
        from lib.neural.checkpoint import CheckpointError, load_checkpoint
        with self.assertRaises(CheckpointError):
            load_checkpoint(_tmpdir(self) / 'none.ckpt')

    def test_require_config(self):
        from lib.neural.checkpoint import (
            CheckpointVersionError, require_config,
        )
        ckpt = self._checkpoint()
        require_config(ckpt, {'d_model': 8, 'dtype': 'float32'})
        with self.assertRaises(CheckpointVersionError):
            require_config(ckpt, {'d_model': 16})

    def test_model_state_survives(self):
        from lib.neural.checkpoint import Checkpoint, dumps, loads
        from lib.neural.model import TranscriptionModel
        from lib.training.loop import restore_model
        from tests.unit.fixtures import ModelFixtures
        cfg = ModelFixtures.config(dtype='float32')
        model = TranscriptionModel(cfg)
        ckpt = loads(dumps(Checkpoint(
            {'model': cfg.to_dict()},
            {f'model.{k}': v for k, v in model.state_dict().items()},
        )))
        restored = restore_model(ckpt)
        mels = ModelFixtures.mels(np.random.default_rng(0), cfg, 1)
        self.assertEqual(restored.greedy_transcribe(mels[0]).ids,
                         model.greedy_transcribe(mels[0]).ids)

    def test_float64_tensors_are_exact(self):
        from lib.neural.checkpoint import Checkpoint, dumps, loads
        values = np.random.default_rng(0).normal(size=(3, 5))
        values[0, 0] = 1.0 + 2.0 ** -40
        ckpt = loads(dumps(Checkpoint({}, {'w': values,
                                           'v': values.astype(np.float32)})))
        self.assertEqual(ckpt.tensors['w'].dtype, np.float64)
        self.assertEqual(ckpt.tensors['v'].dtype, np.float32)
        np.testing.assert_array_equal(ckpt.tensors['w'], values)

    def test_unknown_dtype_code(self):
        from lib.neural.checkpoint import (
            Checkpoint, CheckpointError, dumps, loads,
        )
        data = bytearray(dumps(Checkpoint(
            {}, {'w': np.zeros(2, dtype=np.float32)}
        )))
        # Header, empty JSON object, tensor count, name length, name 'w'.
        data[8 + 8 + 2 + 4 + 2 + 1] = 7
        with self.assertRaises(CheckpointError):
            loads(bytes(data))

    def test_float64_model_survives(self):
        from lib.neural.checkpoint import (
            Checkpoint, load_checkpoint, save_checkpoint,
        )
        from lib.neural.model import TranscriptionModel
        from lib.training.loop import restore_model
        from tests.unit.fixtures import ModelFixtures
        cfg = ModelFixtures.config()
        model = TranscriptionModel(cfg)
        path = _tmpdir(self) / 'model.ckpt'
        save_checkpoint(path, Checkpoint(
            {'model': cfg.to_dict()},
            {f'model.{k}': v for k, v in model.state_dict().items()},
        ))
        restored = restore_model(load_checkpoint(path))
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(restored.state_dict()[name], value)
        mels = ModelFixtures.mels(np.random.default_rng(0), cfg, 1)
        np.testing.assert_array_equal(
            restored.encode(mels).data, model.encode(mels).data
        )


class TestConfigLoading(unittest.TestCase):
    """Test config validation and materialization."""

    def _write(self, content) -> Path:
        import yaml
        path = _tmpdir(self) / 'config.yaml'
        path.write_text(yaml.safe_dump(content))
        return path

    def test_defaults(self):
        from lib.config import load_config
        cfg = load_config()
        self.assertEqual(cfg.seed, 0)
        self.assertEqual(cfg.model.d_model, 384)
        self.assertEqual(cfg.finetune.mode.value, 'confusion')
        self.assertIsNone(cfg.bank)

    def test_relative_paths_resolved(self):
        from lib.config import load_config
        path = self._write({
            'render': {'bank': 'bank/bank.json', 'midi_dir': 'midi'},
            'train': {'dataset_dirs': ['data']},
        })
        cfg = load_config(path)
        self.assertEqual(cfg.bank, path.parent / 'bank' / 'bank.json')
        self.assertEqual(cfg.midi_dir, path.parent / 'midi')
        self.assertEqual(cfg.train.dataset_dirs, (str(path.parent / 'data'),))

    def test_overrides_and_model_seed(self):
        from lib.config import load_config
        from lib.training.steps import FinetuneMode
        path = self._write({'seed': 1, 'finetune': {'lambda': 0.5}})
        cfg = load_config(path, {'seed': 7, 'threads': None,
                                 'finetune': {'mode': 'adaptation'}})
        self.assertEqual(cfg.seed, 7)
        self.assertEqual(cfg.model.seed, 7)
        self.assertEqual(cfg.threads, 1)
        self.assertIs(cfg.finetune.mode, FinetuneMode.ADAPTATION)
        self.assertEqual(cfg.finetune.lambda_, 0.5)

    def test_unknown_key(self):
        from lib.config import ConfigError, load_config
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write({'model': {'width': 3}}))
        self.assertEqual(ctx.exception.path, 'model')

    def test_out_of_range_value(self):
        from lib.config import ConfigError, load_config
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write({'render': {'limit_prob': 1.5}}))
        self.assertEqual(ctx.exception.path, 'render.limit_prob')

    def test_inconsistent_model(self):
        from lib.config import ConfigError, load_config
        with self.assertRaises(ConfigError):
            load_config(self._write({'model': {'d_model': 10,
                                               'n_heads': 3}}))

    def test_missing_and_malformed_files(self):
        from lib.config import ConfigError, load_config
        tmp = _tmpdir(self)
        with self.assertRaises(ConfigError):
            load_config(tmp / 'missing.yaml')
        (tmp / 'list.yaml').write_text('- 1\n- 2\n')
        with self.assertRaises(ConfigError):
            load_config(tmp / 'list.yaml')

    def test_require_path(self):
        from lib.config import ConfigError, load_config
        cfg = load_config()
        with self.assertRaises(ConfigError) as ctx:
            cfg.require_path(cfg.midi_dir, 'render.midi_dir')
        self.assertEqual(ctx.exception.path, 'render.midi_dir')


class TestPretraining(unittest.TestCase):
    """Test pre-training runs on a small rendered dataset."""

    def setUp(self):
        from lib.training.data import ExampleStore, MultiStore
        from tests.unit.fixtures import DatasetFixtures, ModelFixtures
        self.tmp = _tmpdir(self)
        self.model_cfg = ModelFixtures.audio_config(max_len=128)
        data = DatasetFixtures.render_dataset(self.tmp / 'data', count=4)
        self.source = MultiStore([ExampleStore(data, self.model_cfg.max_len)])

    def _run(self, out: str, steps: int, resume=None):
        from lib.training.loop import TrainConfig, run_pretraining
        cfg = TrainConfig(steps=steps, batch_size=2, lr=1e-3,
                          checkpoint_every=0, log_every=1)
        return run_pretraining(self.model_cfg, cfg, self.tmp / out, seed=4,
                               source=self.source, resume=resume)

    def test_run_writes_log_and_checkpoint(self):
        from lib.neural.checkpoint import load_checkpoint
        from lib.training.loop import LAST_CHECKPOINT, LOG_FILE
        result = self._run('run', 2)
        self.assertEqual([r.step for r in result.reports], [1, 2])
        for report in result.reports:
            self.assertTrue(report.is_finite())
            self.assertEqual(report.disc_loss, None)
        lines = (self.tmp / 'run' / LOG_FILE).read_text().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(json.loads(lines[0])['step'], 1)
        self.assertEqual(result.checkpoint, self.tmp / 'run' / LAST_CHECKPOINT)
        ckpt = load_checkpoint(result.checkpoint)
        self.assertEqual(ckpt.meta['kind'], 'pretrain')
        self.assertEqual(ckpt.meta['step'], 2)
        self.assertTrue((self.tmp / 'run' / 'vocab.json').is_file())

    def test_resume_matches_uninterrupted_run(self):
        from lib.neural.checkpoint import load_checkpoint
        straight = load_checkpoint(self._run('straight', 4).checkpoint)
        first = self._run('resumed', 2)
        resumed = self._run('resumed', 4, resume=first.checkpoint)
        self.assertEqual([r.step for r in resumed.reports], [3, 4])
        again = load_checkpoint(resumed.checkpoint)
        self.assertEqual(set(again.tensors), set(straight.tensors))
        for name, value in straight.tensors.items():
            np.testing.assert_allclose(again.tensors[name], value,
                                       rtol=1e-5, atol=1e-7)
        log = (self.tmp / 'resumed' / 'train.jsonl').read_text()
        self.assertEqual(len(log.splitlines()), 4)

    def test_same_seed_same_losses(self):
        a = self._run('a', 2)
        b = self._run('b', 2)
        self.assertEqual([r.transcription_ce for r in a.reports],
                         [r.transcription_ce for r in b.reports])

    def test_missing_dataset(self):
        from lib.training.loop import TrainConfig, run_pretraining
        with self.assertRaises(FileNotFoundError):
            run_pretraining(self.model_cfg, TrainConfig(steps=1),
                            self.tmp / 'none')


class TestFinetuning(unittest.TestCase):
    """Test fine-tuning with the domain discriminator."""

    def setUp(self):
        from lib.training.data import ExampleStore, MultiStore, RealAudioStore
        from lib.training.loop import TrainConfig, run_pretraining
        from tests.unit.fixtures import DatasetFixtures, ModelFixtures
        self.tmp = _tmpdir(self)
        self.model_cfg = ModelFixtures.audio_config(max_len=128)
        data = DatasetFixtures.render_dataset(self.tmp / 'data', count=3)
        self.source = MultiStore([ExampleStore(data, self.model_cfg.max_len)])
        self.real = RealAudioStore(
            DatasetFixtures.real_dir(self.tmp / 'real', count=2)
        )
        self.pretrained = run_pretraining(
            self.model_cfg, TrainConfig(steps=1, batch_size=2,
                                        checkpoint_every=0),
            self.tmp / 'pre', source=self.source,
        ).checkpoint

    def _cfg(self, **kw):
        from lib.training.loop import FinetuneConfig
        params = dict(steps=2, batch_size=2, checkpoint_every=0, log_every=1)
        params.update(kw)
        return FinetuneConfig(**params)

    def test_both_modes_run(self):
        from lib.neural.checkpoint import load_checkpoint
        from lib.training.loop import run_finetuning
        from lib.training.steps import FinetuneMode
        for mode in FinetuneMode:
            result = run_finetuning(
                self.model_cfg, self._cfg(mode=mode), self.tmp / mode.value,
                self.pretrained, seed=1, source=self.source, real=self.real,
            )
            self.assertEqual(len(result.reports), 2)
            for report in result.reports:
                self.assertTrue(report.is_finite())
                self.assertIsNotNone(report.disc_loss)
                self.assertEqual(report.mode, mode.value)
            ckpt = load_checkpoint(result.checkpoint)
            self.assertEqual(ckpt.meta['kind'], 'finetune')
            self.assertTrue(ckpt.section('disc'))

    def test_resume_continues_steps(self):
        from lib.training.loop import run_finetuning
        first = run_finetuning(self.model_cfg, self._cfg(steps=1),
                               self.tmp / 'ft', self.pretrained,
                               source=self.source, real=self.real)
        second = run_finetuning(self.model_cfg, self._cfg(steps=2),
                                self.tmp / 'ft', resume=first.checkpoint,
                                source=self.source, real=self.real)
        self.assertEqual([r.step for r in second.reports], [2])

    def test_pretraining_checkpoint_cannot_resume(self):
        from lib.training.loop import run_finetuning
        with self.assertRaises(ValueError):
            run_finetuning(self.model_cfg, self._cfg(), self.tmp / 'ft',
                           resume=self.pretrained, source=self.source,
                           real=self.real)

    def test_missing_inputs(self):
        from lib.training.loop import run_finetuning
        with self.assertRaises(FileNotFoundError):
            run_finetuning(self.model_cfg, self._cfg(), self.tmp / 'ft',
                           self.pretrained, source=self.source)
        with self.assertRaises(FileNotFoundError):
            run_finetuning(self.model_cfg, self._cfg(), self.tmp / 'ft',
                           source=self.source, real=self.real)

    def test_architecture_mismatch(self):
        from lib.neural.checkpoint import CheckpointVersionError
        from lib.training.loop import run_finetuning
        from tests.unit.fixtures import ModelFixtures
        with self.assertRaises(CheckpointVersionError):
            run_finetuning(ModelFixtures.audio_config(max_len=128, d_model=12),
                           self._cfg(), self.tmp / 'ft', self.pretrained,
                           source=self.source, real=self.real)


class TestDomainClassifier(unittest.TestCase):
    """Test the held-out domain classifier on frozen encoder windows."""

    def test_shifted_domain_is_told_apart(self):
        from lib.neural.model import TranscriptionModel
        from lib.training.domain_classifier import (
            ClassifierConfig, train_domain_classifier,
        )
        from tests.unit.fixtures import ModelFixtures
        cfg = ModelFixtures.config()
        model = TranscriptionModel(cfg)
        rng = np.random.default_rng(0)
        synthetic = ModelFixtures.mels(rng, cfg, 8)
        real = ModelFixtures.mels(rng, cfg, 8) + 3.0
        result = train_domain_classifier(
            model, synthetic, real,
            ClassifierConfig(steps=150, batch_size=8, lr=1e-2),
        )
        self.assertGreaterEqual(result.train_accuracy, 0.7)
        self.assertGreaterEqual(result.heldout_accuracy, 0.7)
        self.assertTrue(np.isfinite(result.final_loss))

    def test_needs_two_segments_per_domain(self):
        from lib.neural.model import TranscriptionModel
        from lib.training.domain_classifier import train_domain_classifier
        from tests.unit.fixtures import ModelFixtures
        cfg = ModelFixtures.config()
        mels = ModelFixtures.mels(np.random.default_rng(0), cfg, 3)
        with self.assertRaises(ValueError):
            train_domain_classifier(TranscriptionModel(cfg), mels, mels[:1])


class TestTranscription(unittest.TestCase):
    """Test transcription of audio of any length."""

    def test_duration_and_segments(self):
        from lib.neural.model import TranscriptionModel
        from lib.transcription import transcribe_audio
        from tests.unit.fixtures import AudioFixtures, ModelFixtures
        model = TranscriptionModel(ModelFixtures.audio_config())
        notes = transcribe_audio(model, AudioFixtures.sine(440.0, 5.0))
        self.assertAlmostEqual(notes.duration_s, 5.0)
        for note in notes:
            self.assertLess(note.onset_s, note.offset_s)

    def test_threads_do_not_change_output(self):
        from lib.neural.model import TranscriptionModel
        from lib.transcription import transcribe_mels
        from tests.unit.fixtures import ModelFixtures
        cfg = ModelFixtures.audio_config()
        model = TranscriptionModel(cfg)
        mels = list(ModelFixtures.mels(np.random.default_rng(0), cfg, 3))
        self.assertEqual(transcribe_mels(model, mels, threads=1),
                         transcribe_mels(model, mels, threads=3))
        self.assertEqual(transcribe_mels(model, []), [])


class TestCommandLine(unittest.TestCase):
    """Test the subcommands through the CLI entrypoint."""

    def _main(self, *argv: str) -> str:
        from synthamt import main
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            main([str(a) for a in argv])
        return out.getvalue()

    def _fixtures(self, tmp: Path) -> Path:
        self._main('fixtures', '--out', tmp / 'fx', '--timbres', '2',
                   '--midi-files', '2')
        return tmp / 'fx'

    def test_fixtures_write_a_usable_config(self):
        from lib.config import load_config
        from lib.manifest import read_manifest
        fx = self._fixtures(_tmpdir(self))
        cfg = load_config(fx / 'config.yaml')
        self.assertTrue(cfg.bank.is_file())
        self.assertEqual(len(list(cfg.midi_dir.glob('*.mid'))), 2)
        self.assertEqual(read_manifest(fx / 'manifest.json').command,
                         'fixtures')

    def test_render_is_thread_independent(self):
        from lib.manifest import read_manifest
        tmp = _tmpdir(self)
        fx = self._fixtures(tmp)
        for threads in ('1', '2'):
            self._main('render', '--config', fx / 'config.yaml',
                       '--out', tmp / f't{threads}', '--examples', '3',
                       '--threads', threads)
        for name in ('000000.wav', '000002.wav', '000001.json', 'index.json'):
            self.assertEqual((tmp / 't1' / name).read_bytes(),
                             (tmp / 't2' / name).read_bytes())
        manifest = read_manifest(tmp / 't1' / 'manifest.json')
        self.assertEqual(manifest.command, 'render')
        self.assertIn('index.json', manifest.artifacts)

    def test_render_without_bank_fails(self):
        with self.assertRaises(SystemExit):
            self._main('render', '--out', _tmpdir(self) / 'out')

    def test_evaluate_identical_files(self):
        from lib.midi.parser import write_smf
        from tests.unit.fixtures import NoteFixtures
        tmp = _tmpdir(self)
        notes = NoteFixtures.notes((0.0, 60, 0.5), (0.5, 64, 1.0),
                                   (1.0, 67, 2.0))
        for side in ('est', 'ref'):
            (tmp / side).mkdir()
            write_smf(tmp / side / 'song.mid', [(1, notes)])
        write_smf(tmp / 'ref' / 'lonely.mid', [(1, notes)])
        table = self._main('evaluate', '--est', tmp / 'est', '--ref',
                           tmp / 'ref', '--out', tmp / 'report.json')
        self.assertIn('song', table)
        self.assertIn('mean', table)
        report = json.loads((tmp / 'report.json').read_text())
        self.assertEqual(report['mean']['f'], 1.0)
        self.assertEqual(report['mean']['fn'], 1.0)
        self.assertEqual(report['unpaired']['ref'], ['lonely'])

    def test_evaluate_without_pairs_fails(self):
        tmp = _tmpdir(self)
        (tmp / 'est').mkdir()
        (tmp / 'ref').mkdir()
        with self.assertRaises(SystemExit):
            self._main('evaluate', '--est', tmp / 'est', '--ref', tmp / 'ref')

    def test_finetune_without_real_audio_fails(self):
        tmp = _tmpdir(self)
        with self.assertRaises(SystemExit):
            self._main('finetune', '--out', tmp / 'ft', '--checkpoint',
                       tmp / 'missing.ckpt')

    def test_realify_directory(self):
        from lib.audio.wav import read_wav
        from tests.unit.fixtures import DatasetFixtures
        tmp = _tmpdir(self)
        DatasetFixtures.real_dir(tmp / 'clean', count=2, seconds=1.0)
        self._main('realify', '--source', tmp / 'clean', '--out',
                   tmp / 'real')
        written = sorted((tmp / 'real').glob('*.wav'))
        self.assertEqual(len(written), 2)
        self.assertEqual(len(read_wav(written[0])), 16000)

    def test_transcribe_reads_config_and_seed(self):
        import yaml
        from lib.audio.wav import write_wav
        from lib.manifest import read_manifest
        from lib.neural.checkpoint import Checkpoint, save_checkpoint
        from lib.neural.model import TranscriptionModel
        from tests.unit.fixtures import AudioFixtures, ModelFixtures
        tmp = _tmpdir(self)
        cfg = ModelFixtures.audio_config()
        model = TranscriptionModel(cfg)
        save_checkpoint(tmp / 'model.ckpt', Checkpoint(
            {'model': cfg.to_dict()},
            {f'model.{k}': v for k, v in model.state_dict().items()},
        ))
        write_wav(tmp / 'in' / 'tone.wav', AudioFixtures.sine(440.0, 1.0))
        (tmp / 'run.yaml').write_text(yaml.safe_dump({'seed': 5,
                                                      'threads': 2}))

        self._main('transcribe', '--checkpoint', tmp / 'model.ckpt',
                   '--config', tmp / 'run.yaml', '--out', tmp / 'a',
                   tmp / 'in')
        manifest = read_manifest(tmp / 'a' / 'manifest.json')
        self.assertEqual(manifest.seed, 5)
        self.assertEqual(manifest.config['threads'], 2)

        self._main('transcribe', '--checkpoint', tmp / 'model.ckpt',
                   '--config', tmp / 'run.yaml', '--seed', '9',
                   '--threads', '1', '--out', tmp / 'b', tmp / 'in')
        manifest = read_manifest(tmp / 'b' / 'manifest.json')
        self.assertEqual(manifest.seed, 9)
        self.assertEqual((tmp / 'a' / 'tone.mid').read_bytes(),
                         (tmp / 'b' / 'tone.mid').read_bytes())

    def test_transcribe_with_missing_config_fails(self):
        tmp = _tmpdir(self)
        with self.assertRaises(SystemExit):
            self._main('transcribe', '--checkpoint', tmp / 'model.ckpt',
                       '--config', tmp / 'none.yaml', '--out', tmp / 'out',
                       tmp / 'in')

    @unittest.skipUnless(SLOW_TESTS, "set SYNTHAMT_SLOW_TESTS=1")
    def test_train_then_transcribe(self):
        import yaml
        from lib.midi.parser import read_smf
        from lib.audio.wav import write_wav
        from tests.unit.fixtures import AudioFixtures
        tmp = _tmpdir(self)
        fx = self._fixtures(tmp)
        self._main('render', '--config', fx / 'config.yaml', '--out',
                   tmp / 'data', '--examples', '4')
        config = {
            'seed': 1,
            'model': {'d_model': 8, 'n_heads': 2, 'd_ff': 16,
                      'enc_layers': 1, 'dec_layers': 1, 'max_len': 128,
                      'disc_hidden': 8},
            'train': {'dataset_dirs': ['data'], 'steps': 2, 'batch_size': 2,
                      'checkpoint_every': 0},
        }
        (tmp / 'train.yaml').write_text(yaml.safe_dump(config))
        self._main('train', '--config', tmp / 'train.yaml', '--out',
                   tmp / 'model')
        self.assertTrue((tmp / 'model' / 'last.ckpt').is_file())

        write_wav(tmp / 'in' / 'tone.wav', AudioFixtures.sine(440.0, 3.0))
        self._main('transcribe', '--checkpoint', tmp / 'model' / 'last.ckpt',
                   '--out', tmp / 'mid', tmp / 'in')
        self.assertTrue((tmp / 'mid' / 'tone.mid').is_file())
        read_smf(tmp / 'mid' / 'tone.mid')
        self.assertTrue((tmp / 'mid' / 'manifest.json').is_file())


if __name__ == '__main__':
    unittest.main()
