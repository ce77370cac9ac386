"""WAV reading, writing and resampling."""


# Imports
from fractions import Fraction
from math import gcd
from pathlib import Path
from typing import Tuple

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly


# Constants
SAMPLE_RATE = 16000
MAX_RATIO_DENOMINATOR = 1000


def to_float(samples: np.ndarray) -> np.ndarray:
    """Convert PCM samples to float32 in [-1, 1] and downmix to mono.

    Parameters
    ----------
    samples : np.ndarray
        Samples as returned by ``scipy.io.wavfile.read``: ``(n,)`` or
        ``(n, channels)``, integer PCM or float.

    Returns
    -------
    np.ndarray
        Mono float32 samples.
    """
    if np.issubdtype(samples.dtype, np.integer):
        info = np.iinfo(samples.dtype)
        if info.min == 0:
            # Unsigned 8-bit PCM is centered at 128.
            samples = (samples.astype(np.float64) - 128.0) / 128.0
        else:
            samples = samples.astype(np.float64) / -float(info.min)
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return samples.astype(np.float32)


def resample(samples: np.ndarray, source_rate: int,
             target_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Resample between integer rates with a polyphase windowed-sinc filter.

    Parameters
    ----------
    samples : np.ndarray
        Mono samples.
    source_rate : int
        Rate of ``samples`` in Hz.
    target_rate : int
        Desired rate in Hz.

    Returns
    -------
    np.ndarray
        Resampled float32 samples.
    """
    if source_rate == target_rate:
        return np.asarray(samples, dtype=np.float32)
    divisor = gcd(int(source_rate), int(target_rate))
    out = resample_poly(
        samples.astype(np.float64),
        up=int(target_rate) // divisor,
        down=int(source_rate) // divisor,
    )
    return out.astype(np.float32)


def stretch(samples: np.ndarray, ratio: float) -> np.ndarray:
    """Play samples ``ratio`` times faster.

    The length shrinks by ``ratio`` and every frequency scales by it.

    Parameters
    ----------
    samples : np.ndarray
        Mono samples.
    ratio : float
        Speed factor, e.g. ``2 ** (1 / 12)`` for one semitone up.

    Returns
    -------
    np.ndarray
        Resampled float32 samples.
    """
    frac = Fraction(ratio).limit_denominator(MAX_RATIO_DENOMINATOR)
    if frac == 1:
        return np.asarray(samples, dtype=np.float32)
    out = resample_poly(
        samples.astype(np.float64), up=frac.denominator, down=frac.numerator
    )
    return out.astype(np.float32)


def read_wav(path: Path, target_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Read a WAV file as mono float32 at ``target_rate``.

    Parameters
    ----------
    path : Path
        WAV file (PCM 8/16/32-bit or float).
    target_rate : int
        Output rate in Hz.

    Returns
    -------
    np.ndarray
        Mono samples.
    """
    rate, samples = wavfile.read(str(path))
    return resample(to_float(samples), rate, target_rate)


def read_wav_native(path: Path) -> Tuple[np.ndarray, int]:
    """Read a WAV file as mono float32 without resampling."""
    rate, samples = wavfile.read(str(path))
    return to_float(samples), int(rate)


def write_wav(path: Path, samples: np.ndarray,
              sample_rate: int = SAMPLE_RATE):
    """Write mono float32 samples as a float WAV file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), sample_rate, np.asarray(samples, np.float32))


def peak_normalize(samples: np.ndarray) -> np.ndarray:
    """Scale samples so the maximum absolute value is 1.

    Silent input is returned as zeros.
    """
    samples = np.asarray(samples, dtype=np.float32)
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak == 0.0:
        return np.zeros_like(samples)
    return (samples / peak).astype(np.float32)
