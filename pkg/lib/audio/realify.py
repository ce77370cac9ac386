"""Corruption chain that turns synthetic audio into a "real" domain.

The chain is a low-pass filter, a smeared reverb-like convolution and
additive noise, followed by peak normalization. It creates a measurable
domain gap without external recordings.
"""


# Imports
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
from scipy.signal import butter, fftconvolve, sosfilt

from lib.audio.wav import SAMPLE_RATE, peak_normalize


@dataclass(frozen=True)
class RealifyConfig:
    """Ranges the corruption parameters are drawn from.

    Attributes
    ----------
    cutoff_hz : Tuple[float, float]
        Low-pass cutoff range.
    decay_s : Tuple[float, float]
        Impulse response decay time (to -60 dB) range.
    wet : Tuple[float, float]
        Reverb mix range.
    snr_db : Tuple[float, float]
        Signal-to-noise ratio range.
    """

    cutoff_hz: Tuple[float, float] = (1500.0, 4000.0)
    decay_s: Tuple[float, float] = (0.2, 0.8)
    wet: Tuple[float, float] = (0.3, 0.7)
    snr_db: Tuple[float, float] = (15.0, 30.0)
    order: int = 4


def impulse_response(decay_s: float, rng: np.random.Generator,
                     sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Exponentially decaying white noise, unit energy."""
    n = max(1, int(round(decay_s * sample_rate)))
    t = np.arange(n) / sample_rate
    ir = rng.standard_normal(n) * np.exp(-6.9 * t / decay_s)
    return ir / np.sqrt(np.sum(ir ** 2))


def realify(samples: np.ndarray, rng: np.random.Generator,
            cfg: RealifyConfig = RealifyConfig(),
            sample_rate: int = SAMPLE_RATE) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Corrupt a buffer.

    Draw order: cutoff, decay, wet mix, SNR, impulse response, noise.

    Parameters
    ----------
    samples : np.ndarray
        Mono input.
    rng : np.random.Generator
        Random generator.
    cfg : RealifyConfig
        Parameter ranges.
    sample_rate : int
        Rate of ``samples``.

    Returns
    -------
    Tuple[np.ndarray, Dict[str, Any]]
        Corrupted float32 samples of the input length and the drawn values.
    """
    cutoff = float(rng.uniform(*cfg.cutoff_hz))
    decay = float(rng.uniform(*cfg.decay_s))
    wet = float(rng.uniform(*cfg.wet))
    snr_db = float(rng.uniform(*cfg.snr_db))

    x = np.asarray(samples, dtype=np.float64)
    sos = butter(cfg.order, min(cutoff, 0.45 * sample_rate), btype='lowpass',
                 fs=sample_rate, output='sos')
    x = sosfilt(sos, x)
    ir = impulse_response(decay, rng, sample_rate)
    x = (1.0 - wet) * x + wet * fftconvolve(x, ir)[:len(x)]

    power = float(np.mean(x ** 2)) if len(x) else 0.0
    noise_power = power / (10.0 ** (snr_db / 10.0)) if power > 0 else 1e-6
    x = x + rng.standard_normal(len(x)) * np.sqrt(noise_power)

    params = {
        'cutoff_hz': cutoff, 'decay_s': decay, 'wet': wet, 'snr_db': snr_db,
    }
    return peak_normalize(x), params
