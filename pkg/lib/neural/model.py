"""Transcription model and domain discriminator."""


# Imports
from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from lib import logger
from lib.neural.layers import (
    DecoderBlock, Embedding, EncoderBlock, LayerNorm, Linear, Module,
    causal_mask, sinusoidal_positions,
)
from lib.neural.tensor import Tensor, no_grad
from lib.tokens.codec import MAX_LEN, TokenSeq
from lib.tokens.vocab import BOS, EOS, VOCAB_SIZE


# Constants
DTYPES = {'float32': np.float32, 'float64': np.float64}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of the transcription model and discriminator.

    Attributes
    ----------
    d_model : int
        Embedding width.
    n_heads : int
        Attention heads.
    d_ff : int
        Feed-forward width.
    enc_layers : int
        Encoder blocks.
    dec_layers : int
        Decoder blocks.
    n_mels : int
        Input bins per frame.
    n_frames : int
        Frames per segment.
    vocab_size : int
        Output classes.
    max_len : int
        Longest token sequence.
    disc_window : int
        Encoder frames per discriminator input.
    disc_hidden : int
        Discriminator hidden width.
    leaky_slope : float
        Discriminator leaky-ReLU slope.
    head_gain : float
        Gain of the output head initialization.
    dropout : float
        Residual dropout rate.
    dtype : str
        ``float32`` or ``float64``.
    seed : int
        Initialization seed.
    """

    d_model: int = 384
    n_heads: int = 6
    d_ff: int = 1024
    enc_layers: int = 2
    dec_layers: int = 3
    n_mels: int = 384
    n_frames: int = 256
    vocab_size: int = VOCAB_SIZE
    max_len: int = MAX_LEN
    disc_window: int = 10
    disc_hidden: int = 512
    leaky_slope: float = 0.2
    head_gain: float = 0.25
    dropout: float = 0.0
    dtype: str = 'float32'
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError(
                f'd_model {self.d_model} not divisible by n_heads '
                f'{self.n_heads}'
            )
        if self.dtype not in DTYPES:
            raise ValueError(f'Unsupported dtype: {self.dtype}')
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f'Dropout outside [0, 1): {self.dropout}')
        if self.disc_window > self.n_frames:
            raise ValueError('Discriminator window longer than a segment')

    @property
    def np_dtype(self):
        return DTYPES[self.dtype]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> ModelConfig:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def parameter_count(cfg: ModelConfig) -> Dict[str, int]:
    """Closed-form parameter counts of the model parts."""
    d, f, v = cfg.d_model, cfg.d_ff, cfg.vocab_size
    attention = 4 * (d * d + d)
    feed_forward = d * f + f + f * d + d
    norm = 2 * d
    encoder = (cfg.n_mels * d + d
               + cfg.enc_layers * (attention + feed_forward + 2 * norm)
               + norm)
    decoder = (v * d
               + cfg.dec_layers * (2 * attention + feed_forward + 3 * norm)
               + norm
               + d * v + v)
    h = cfg.disc_hidden
    discriminator = (cfg.disc_window * d * h + h) + (h * h + h) + (h + 1)
    return {
        'encoder': encoder,
        'decoder': decoder,
        'discriminator': discriminator,
    }


class TranscriptionModel(Module):
    """Encoder-decoder transformer from log-mel frames to tokens."""

    def __init__(self, cfg: ModelConfig):
        rng = np.random.default_rng(cfg.seed)
        dt = cfg.np_dtype
        d = cfg.d_model
        self.cfg = cfg

        # Encoder
        self.input_proj = Linear(rng, cfg.n_mels, d, dt)
        self.enc_blocks = [
            EncoderBlock(rng, d, cfg.n_heads, cfg.d_ff, cfg.dropout, dt)
            for _ in range(cfg.enc_layers)
        ]
        self.enc_norm = LayerNorm(d, dt)

        # Decoder
        self.token_embed = Embedding(rng, cfg.vocab_size, d, dt)
        self.dec_blocks = [
            DecoderBlock(rng, d, cfg.n_heads, cfg.d_ff, cfg.dropout, dt)
            for _ in range(cfg.dec_layers)
        ]
        self.dec_norm = LayerNorm(d, dt)
        self.head = Linear(rng, d, cfg.vocab_size, dt, gain=cfg.head_gain)

        self.positions = sinusoidal_positions(
            max(cfg.n_frames, cfg.max_len), d, dt
        )
        self.dropout_rng = np.random.default_rng([cfg.seed, 1])

    def encoder_parameters(self) -> Dict[str, Tensor]:
        return {
            n: p for n, p in self.named_parameters()
            if n.split('.')[0] in ('input_proj', 'enc_blocks', 'enc_norm')
        }

    def decoder_parameters(self) -> Dict[str, Tensor]:
        encoder = self.encoder_parameters()
        return {
            n: p for n, p in self.named_parameters() if n not in encoder
        }

    def encode(self, mels: np.ndarray) -> Tensor:
        """Encode log-mel frames.

        Parameters
        ----------
        mels : np.ndarray
            ``(frames, n_mels)`` or ``(batch, frames, n_mels)``.

        Returns
        -------
        Tensor
            ``(batch, frames, d_model)`` memory.
        """
        mels = np.asarray(mels, dtype=self.cfg.np_dtype)
        if mels.ndim == 2:
            mels = mels[None]
        expected = (self.cfg.n_frames, self.cfg.n_mels)
        if mels.ndim != 3 or mels.shape[1:] != expected:
            raise ValueError(
                f'Expected mel frames of shape (batch, {expected[0]}, '
                f'{expected[1]}), got {mels.shape}'
            )
        x = self.input_proj(Tensor(mels)) + self.positions[:mels.shape[1]]
        for block in self.enc_blocks:
            x = block(x, self.dropout_rng)
        return self.enc_norm(x)

    def decode_logits(self, memory: Tensor, prefix: np.ndarray) -> Tensor:
        """Next-token logits for every prefix position.

        Parameters
        ----------
        memory : Tensor
            Encoder output, ``(batch, frames, d_model)``.
        prefix : np.ndarray
            ``(length,)`` or ``(batch, length)`` token ids starting with BOS.

        Returns
        -------
        Tensor
            ``(batch, length, vocab_size)`` logits.
        """
        prefix = np.asarray(prefix, dtype=np.int64)
        if prefix.ndim == 1:
            prefix = prefix[None]
        length = prefix.shape[1]
        if length > self.cfg.max_len:
            raise ValueError(
                f'Prefix length {length} exceeds max_len {self.cfg.max_len}'
            )
        if prefix.shape[0] != memory.shape[0]:
            raise ValueError(
                f'Batch mismatch: {prefix.shape[0]} prefixes, '
                f'{memory.shape[0]} memories'
            )
        x = self.token_embed(prefix) + self.positions[:length]
        mask = causal_mask(length, self.cfg.np_dtype)
        for block in self.dec_blocks:
            x = block(x, memory, mask, self.dropout_rng)
        return self.head(self.dec_norm(x))

    def __call__(self, mels: np.ndarray, prefix: np.ndarray) -> Tensor:
        return self.decode_logits(self.encode(mels), prefix)

    def greedy_transcribe(self, mel: np.ndarray) -> TokenSeq:
        """Argmax decoding of one segment from BOS to EOS or max_len."""
        return self.batch_transcribe([mel], threads=1)[0]

    def _greedy(self, mels: np.ndarray) -> List[TokenSeq]:
        with no_grad():
            memory = self.encode(mels)
            batch = memory.shape[0]
            ids = np.full((batch, 1), BOS, dtype=np.int64)
            done = np.zeros(batch, dtype=bool)
            while ids.shape[1] < self.cfg.max_len and not done.all():
                logits = self.decode_logits(memory, ids).data[:, -1]
                step = np.where(done, EOS, logits.argmax(axis=-1))
                ids = np.concatenate([ids, step[:, None]], axis=1)
                done |= step == EOS
        result = []
        for row in ids:
            stop = np.flatnonzero(row == EOS)
            end = stop[0] + 1 if len(stop) else len(row)
            result.append(TokenSeq(tuple(int(i) for i in row[:end]),
                                   self.cfg.max_len))
        return result

    def batch_transcribe(self, mels: Sequence[np.ndarray], threads: int = 1,
                         chunk: int = 8) -> List[TokenSeq]:
        """Greedy decoding of many segments.

        Chunks of ``chunk`` segments are decoded together; with more than
        one thread the chunks run concurrently over read-only parameters.
        """
        was_training = self.training
        self.eval()
        chunks = [
            np.stack(mels[i:i + chunk]) for i in range(0, len(mels), chunk)
        ]
        try:
            if threads > 1 and len(chunks) > 1:
                with ThreadPoolExecutor(threads) as pool:
                    parts = list(pool.map(self._greedy, chunks))
            else:
                parts = [self._greedy(c) for c in chunks]
        finally:
            self.train(was_training)
        logger.debug(f'Transcribed {len(mels)} segments.')
        return [seq for part in parts for seq in part]


class Discriminator(Module):
    """Three-layer classifier over flattened encoder windows."""

    def __init__(self, cfg: ModelConfig, seed: Optional[int] = None):
        rng = np.random.default_rng(
            [cfg.seed if seed is None else seed, 2]
        )
        dt = cfg.np_dtype
        self.cfg = cfg
        d_in = cfg.disc_window * cfg.d_model
        self.hidden1 = Linear(rng, d_in, cfg.disc_hidden, dt)
        self.hidden2 = Linear(rng, cfg.disc_hidden, cfg.disc_hidden, dt)
        self.output = Linear(rng, cfg.disc_hidden, 1, dt)

    def logits(self, windows: Tensor) -> Tensor:
        expected = self.cfg.disc_window * self.cfg.d_model
        if windows.ndim == 3:
            windows = windows.reshape(windows.shape[0], -1)
        if windows.ndim != 2 or windows.shape[1] != expected:
            raise ValueError(
                f'Expected windows of {self.cfg.disc_window} x '
                f'{self.cfg.d_model} = {expected} values, got {windows.shape}'
            )
        slope = self.cfg.leaky_slope
        h = self.hidden1(windows).leaky_relu(slope)
        h = self.hidden2(h).leaky_relu(slope)
        return self.output(h).reshape(-1)

    def __call__(self, windows: Tensor) -> Tensor:
        """Probability that each window comes from the real domain."""
        return self.logits(windows).sigmoid()


def random_windows(memory: Tensor, width: int,
                   rng: np.random.Generator) -> Tensor:
    """One random window of ``width`` frames per example, flattened."""
    batch, frames, d = memory.shape
    starts = rng.integers(0, frames - width + 1, size=batch)
    rows = np.arange(batch)[:, None]
    cols = starts[:, None] + np.arange(width)[None, :]
    return memory[rows, cols].reshape(batch, width * d)
