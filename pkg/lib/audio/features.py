"""Log-mel features of fixed-length audio segments."""


# Imports
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import List
import warnings

import librosa
import numpy as np

from lib.audio.wav import SAMPLE_RATE


# Constants
N_FFT = 2048
HOP_LENGTH = 160
N_MELS = 384
N_FRAMES = 256
FMIN = 0.0
FMAX = 8000.0
LOG_FLOOR = 1e-5
SEGMENT_SAMPLES = N_FRAMES * HOP_LENGTH
HOP_S = HOP_LENGTH / SAMPLE_RATE


@dataclass(frozen=True, eq=False)
class MelSegment:
    """A 2.56 s log-mel matrix.

    Attributes
    ----------
    frames : np.ndarray
        ``(256, 384)`` float32 natural-log mel magnitudes, floored at
        ``log(1e-5)``.
    hop_s : float
        Frame hop in seconds.
    """

    frames: np.ndarray
    hop_s: float = HOP_S

    def __post_init__(self):
        if self.frames.shape != (N_FRAMES, N_MELS):
            raise ValueError(
                f'Expected mel shape {(N_FRAMES, N_MELS)}, '
                f'got {self.frames.shape}'
            )


@lru_cache(maxsize=1)
def mel_basis() -> np.ndarray:
    """HTK mel filterbank, ``(384, 1025)``.

    With 384 filters over 1025 FFT bins some low filters are empty; librosa
    warns about those and the warning is silenced.
    """
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', UserWarning)
        basis = librosa.filters.mel(
            sr=SAMPLE_RATE, n_fft=N_FFT, n_mels=N_MELS, fmin=FMIN,
            fmax=FMAX, htk=True, norm=None,
        )
    basis.setflags(write=False)
    return basis


def mel_center_frequencies() -> np.ndarray:
    """Center frequency in Hz of every mel filter."""
    return librosa.mel_frequencies(
        n_mels=N_MELS + 2, fmin=FMIN, fmax=FMAX, htk=True
    )[1:-1]


def melspec(samples: np.ndarray,
            sample_rate: int = SAMPLE_RATE) -> MelSegment:
    """Compute the log-mel spectrogram of one segment.

    Parameters
    ----------
    samples : np.ndarray
        Exactly 40960 mono samples.
    sample_rate : int
        Must be 16000.

    Returns
    -------
    MelSegment
        256 frames of 384 bins.

    Raises
    ------
    ValueError
        Raised on a wrong length or rate.
    """
    if sample_rate != SAMPLE_RATE:
        raise ValueError(f'Expected {SAMPLE_RATE} Hz, got {sample_rate} Hz')
    samples = np.asarray(samples, dtype=np.float32)
    if samples.shape != (SEGMENT_SAMPLES,):
        raise ValueError(
            f'Expected {SEGMENT_SAMPLES} samples, got {samples.shape}'
        )
    spectrum = np.abs(librosa.stft(
        samples, n_fft=N_FFT, hop_length=HOP_LENGTH, window='hann',
        center=True, pad_mode='reflect',
    ))[:, :N_FRAMES]
    mel = mel_basis() @ spectrum
    frames = np.log(np.maximum(mel, LOG_FLOOR)).T
    return MelSegment(frames.astype(np.float32))


def segment_audio(samples: np.ndarray,
                  segment_len: int = SEGMENT_SAMPLES) -> List[np.ndarray]:
    """Split audio into consecutive windows, zero-padding the last.

    Returns ``ceil(n / segment_len)`` windows, at least one.
    """
    samples = np.asarray(samples, dtype=np.float32)
    count = max(1, -(-len(samples) // segment_len))
    padded = np.zeros(count * segment_len, dtype=np.float32)
    padded[:len(samples)] = samples
    return list(padded.reshape(count, segment_len))


def dump_npy(mel: MelSegment, path: Path):
    """Write the frames in NPY format (row-major little-endian float32)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, np.ascontiguousarray(mel.frames, dtype='<f4'))
