"""One-shot sample bank and timbre mixing."""


# Imports
from __future__ import annotations
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from threading import Lock
from typing import Dict, List, Mapping, Optional, Tuple
import json

import numpy as np

from lib import logger
from lib.audio.wav import (
    SAMPLE_RATE, peak_normalize, read_wav, resample, stretch,
)
from lib.midi.classes import InstrumentGroup, MAX_PITCH, MIN_PITCH


# Constants
MIN_ALPHA = 0.0
MAX_ALPHA = 2.0
SEMITONES_PER_OCTAVE = 12


class BankResourceError(LookupError):
    """Raised when the bank cannot provide the requested material."""


@dataclass(frozen=True, eq=False)
class OneShot:
    """A single-note recording.

    Attributes
    ----------
    samples : np.ndarray
        Mono float32 samples with max absolute value at most 1.
    pitch : int
        MIDI pitch of the recording.
    timbre_id : str
        Identifier of the timbre the sample belongs to.
    group : InstrumentGroup
        Instrument group of the timbre.
    sample_rate : int
        Always 16 kHz once ingested.
    """

    samples: np.ndarray
    pitch: int
    timbre_id: str
    group: InstrumentGroup
    sample_rate: int = SAMPLE_RATE

    @property
    def duration_s(self) -> float:
        """Sample length in seconds."""
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class Timbre:
    """All one-shots recorded for one timbre."""

    timbre_id: str
    group: InstrumentGroup
    samples: Mapping[int, OneShot]

    def pitches(self) -> Tuple[int, ...]:
        """Available pitches in ascending order."""
        return tuple(sorted(self.samples))


def _ingest(samples: np.ndarray) -> np.ndarray:
    """Bring raw samples within [-1, 1] without changing quiet material."""
    samples = np.nan_to_num(np.asarray(samples, dtype=np.float32))
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    return peak_normalize(samples) if peak > 1.0 else samples


class SampleBank:
    """One-shot samples indexed by (timbre, pitch).

    The bank is immutable after construction.
    """

    def __init__(self, timbres: Mapping[str, Timbre]):
        """Create a bank.

        Parameters
        ----------
        timbres : Mapping[str, Timbre]
            Timbres by identifier.
        """
        self._timbres: Dict[str, Timbre] = dict(sorted(timbres.items()))

    @classmethod
    def from_arrays(cls,
                    arrays: Mapping[str, Tuple[InstrumentGroup,
                                               Mapping[int, np.ndarray]]],
                    sample_rate: int = SAMPLE_RATE) -> SampleBank:
        """Build a bank from in-memory arrays.

        Parameters
        ----------
        arrays : Mapping[str, Tuple[InstrumentGroup, Mapping[int, ndarray]]]
            ``timbre_id => (group, {pitch: samples})``.
        sample_rate : int
            Rate of the arrays; they are resampled to 16 kHz.
        """
        timbres = {}
        for timbre_id, (group, pitches) in arrays.items():
            group = InstrumentGroup(group)
            timbres[timbre_id] = Timbre(timbre_id, group, {
                int(p): OneShot(
                    _ingest(resample(np.asarray(s), sample_rate)),
                    int(p), timbre_id, group,
                )
                for p, s in pitches.items()
            })
        return cls(timbres)

    @classmethod
    def from_manifest(cls, path: Path) -> SampleBank:
        """Load a bank from its JSON manifest.

        The manifest maps ``timbre_id`` to ``{"group": ..., "pitches":
        {midi_pitch: wav_path}}``. Paths are relative to the manifest.

        Parameters
        ----------
        path : Path
            Manifest file.

        Returns
        -------
        SampleBank
            Loaded bank.
        """
        path = Path(path)
        if not path.is_file():
            raise BankResourceError(f'Sample bank manifest not found: {path}')
        manifest = json.loads(path.read_text())
        timbres = {}
        for timbre_id, entry in manifest.items():
            try:
                group = InstrumentGroup(entry['group'])
            except (KeyError, ValueError) as e:
                raise BankResourceError(
                    f'Timbre {timbre_id} has no valid group in {path}'
                ) from e
            samples = {}
            for pitch, wav in entry.get('pitches', {}).items():
                pitch = int(pitch)
                if not MIN_PITCH <= pitch <= MAX_PITCH:
                    raise BankResourceError(
                        f'Timbre {timbre_id} lists invalid pitch {pitch}'
                    )
                samples[pitch] = OneShot(
                    _ingest(read_wav(path.parent / wav)),
                    pitch, timbre_id, group,
                )
            timbres[timbre_id] = Timbre(timbre_id, group, samples)
        logger.info(f'Loaded {len(timbres)} timbres from {path}.')
        return cls(timbres)

    def __len__(self) -> int:
        return len(self._timbres)

    def __getitem__(self, timbre_id: str) -> Timbre:
        try:
            return self._timbres[timbre_id]
        except KeyError:
            raise BankResourceError(f'Unknown timbre: {timbre_id}') from None

    def timbre_ids(self) -> List[str]:
        """Timbre identifiers in sorted order."""
        return list(self._timbres)

    def mixable_pairs(self) -> List[Tuple[str, str]]:
        """Unordered timbre pairs that share at least one pitch."""
        return [
            (a, b)
            for a, b in combinations(self._timbres, 2)
            if set(self._timbres[a].samples) & set(self._timbres[b].samples)
        ]


def mix(main: OneShot, sub: OneShot, alpha: float) -> OneShot:
    """Mix two one-shots as ``main + alpha * sub``, peak-normalized.

    Parameters
    ----------
    main : OneShot
        Sample of the main timbre.
    sub : OneShot
        Sample of the sub timbre at the same pitch.
    alpha : float
        Mixing rate in [0, 2].

    Returns
    -------
    OneShot
        Mixed sample spanning the longer input, carrying main's identity.

    Raises
    ------
    ValueError
        Raised on pitch or sample rate mismatch, or alpha out of range.
    """
    if main.pitch != sub.pitch:
        raise ValueError(f'Pitch mismatch: {main.pitch} != {sub.pitch}')
    if main.sample_rate != sub.sample_rate:
        raise ValueError(
            f'Sample rate mismatch: {main.sample_rate} != {sub.sample_rate}'
        )
    if not MIN_ALPHA <= alpha <= MAX_ALPHA:
        raise ValueError(f'Alpha out of range [0, 2]: {alpha}')

    length = max(len(main.samples), len(sub.samples))
    mixed = np.zeros(length, dtype=np.float64)
    mixed[:len(main.samples)] += main.samples
    mixed[:len(sub.samples)] += alpha * sub.samples.astype(np.float64)
    return OneShot(
        peak_normalize(mixed), main.pitch, main.timbre_id, main.group,
        main.sample_rate,
    )


@dataclass(eq=False)
class MixedTimbre:
    """A timbre formed by mixing a main and a sub timbre.

    Attributes
    ----------
    main : Timbre
        Main timbre; decides the instrument group.
    sub : Timbre
        Sub timbre.
    alpha : float
        Mixing rate shared by every pitch.
    """

    main: Timbre
    sub: Timbre
    alpha: float
    _cache: Dict[int, OneShot] = field(default_factory=dict, repr=False)
    _lock: Lock = field(default_factory=Lock, repr=False)

    def __post_init__(self):
        if not MIN_ALPHA <= self.alpha <= MAX_ALPHA:
            raise ValueError(f'Alpha out of range [0, 2]: {self.alpha}')

    @property
    def main_id(self) -> str:
        return self.main.timbre_id

    @property
    def sub_id(self) -> str:
        return self.sub.timbre_id

    @property
    def group(self) -> InstrumentGroup:
        return self.main.group

    def pitches(self) -> Tuple[int, ...]:
        """Pitches both source timbres provide."""
        return tuple(sorted(set(self.main.samples) & set(self.sub.samples)))

    def describe(self) -> Dict[str, object]:
        """JSON serializable description."""
        return {
            'main': self.main_id,
            'sub': self.sub_id,
            'alpha': self.alpha,
            'group': self.group.value,
        }

    def lookup(self, pitch: int) -> OneShot:
        return lookup(self, pitch)


def nearest_pitch(available: Tuple[int, ...], pitch: int) -> Optional[int]:
    """Nearest available pitch, preferring the lower one on ties."""
    if not available:
        return None
    return min(available, key=lambda p: (abs(p - pitch), p))


def lookup(timbre: MixedTimbre, pitch: int) -> OneShot:
    """Retrieve the mixed sample for a pitch.

    Exact pitches are mixed directly. Other pitches reuse the nearest shared
    pitch, resampled by ``2 ** (delta / 12)``.

    Parameters
    ----------
    timbre : MixedTimbre
        Timbre to read from.
    pitch : int
        MIDI pitch.

    Returns
    -------
    OneShot
        Peak-normalized sample at ``pitch``.

    Raises
    ------
    BankResourceError
        Raised if the source timbres share no pitch.
    """
    if not MIN_PITCH <= pitch <= MAX_PITCH:
        raise ValueError(f'Pitch out of range: {pitch}')

    with timbre._lock:
        cached = timbre._cache.get(pitch)
    if cached is not None:
        return cached

    source = nearest_pitch(timbre.pitches(), pitch)
    if source is None:
        raise BankResourceError(
            f'Timbres {timbre.main_id} and {timbre.sub_id} share no pitch.'
        )
    base = mix(
        timbre.main.samples[source], timbre.sub.samples[source], timbre.alpha
    )
    if source == pitch:
        result = base
    else:
        ratio = 2.0 ** ((pitch - source) / SEMITONES_PER_OCTAVE)
        result = OneShot(
            peak_normalize(stretch(base.samples, ratio)),
            pitch, base.timbre_id, base.group, base.sample_rate,
        )

    with timbre._lock:
        return timbre._cache.setdefault(pitch, result)


def draw_mixed_timbre(bank: SampleBank,
                      rng: np.random.Generator,
                      mixing: bool = True) -> MixedTimbre:
    """Draw a random main/sub timbre pair and mixing rate.

    Draw order: main timbre, sub timbre, alpha.

    Parameters
    ----------
    bank : SampleBank
        Bank to draw from.
    rng : np.random.Generator
        Caller-owned random generator.
    mixing : bool
        If False, alpha is forced to 0 after the draw.

    Returns
    -------
    MixedTimbre
        Timbre with ``main != sub``.

    Raises
    ------
    BankResourceError
        Raised if no two timbres share a pitch.
    """
    ids = bank.timbre_ids()
    partners: Dict[str, List[str]] = {
        t: [
            o for o in ids
            if o != t and set(bank[t].samples) & set(bank[o].samples)
        ]
        for t in ids
    }
    candidates = [t for t in ids if partners[t]]
    if not candidates:
        raise BankResourceError(
            'Timbre mixing needs at least two timbres sharing a pitch; '
            f'bank has {len(ids)} timbres.'
        )
    main = candidates[int(rng.integers(len(candidates)))]
    sub = partners[main][int(rng.integers(len(partners[main])))]
    alpha = float(rng.uniform(MIN_ALPHA, MAX_ALPHA))
    if not mixing:
        alpha = 0.0
    logger.debug(f'Mixed timbre {main} + {alpha:.3f} * {sub}.')
    return MixedTimbre(bank[main], bank[sub], alpha)
