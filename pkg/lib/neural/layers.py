"""Trainable building blocks."""


# Imports
from __future__ import annotations
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from lib.neural.tensor import Tensor, embedding, layer_norm


# Constants
MASK_VALUE = -1e9


class Module:
    """Base class holding parameters and sub-modules.

    Parameters are discovered from attributes in assignment order, which
    makes parameter names and ordering deterministic.
    """

    training = True

    def named_parameters(self, prefix: str = '') -> Iterator[
            Tuple[str, Tensor]]:
        for key, value in vars(self).items():
            name = f'{prefix}{key}'
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f'{name}.')
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f'{name}.{i}.')

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        """Copy values into existing parameters.

        Raises
        ------
        KeyError
            Raised if a parameter is missing from ``state``.
        ValueError
            Raised on a shape mismatch.
        """
        for name, p in self.named_parameters():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ValueError(
                    f'Shape mismatch for {name}: expected {p.shape}, '
                    f'got {value.shape}'
                )
            p.data = value.astype(p.dtype)

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode: bool = True):
        for module in self.modules():
            module.training = mode

    def eval(self):
        self.train(False)

    def modules(self) -> Iterator[Module]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, list):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   dtype, gain: float = 1.0) -> np.ndarray:
    limit = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out)).astype(dtype)


def parameter(data: np.ndarray) -> Tensor:
    return Tensor(data, requires_grad=True)


class Linear(Module):
    """Affine map ``x @ W + b``."""

    def __init__(self, rng: np.random.Generator, d_in: int, d_out: int,
                 dtype=np.float32, gain: float = 1.0):
        self.weight = parameter(xavier_uniform(rng, d_in, d_out, dtype, gain))
        self.bias = parameter(np.zeros(d_out, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class LayerNorm(Module):

    def __init__(self, d: int, dtype=np.float32):
        self.gamma = parameter(np.ones(d, dtype=dtype))
        self.beta = parameter(np.zeros(d, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta)


class Embedding(Module):

    def __init__(self, rng: np.random.Generator, n: int, d: int,
                 dtype=np.float32):
        self.weight = parameter(xavier_uniform(rng, n, d, dtype))

    def __call__(self, ids: np.ndarray) -> Tensor:
        return embedding(self.weight, ids)


def sinusoidal_positions(length: int, d: int, dtype=np.float32) -> np.ndarray:
    """Fixed sine/cosine position table, ``(length, d)``."""
    position = np.arange(length)[:, None]
    rate = np.exp(-np.log(10000.0) * np.arange(0, d, 2) / d)
    table = np.zeros((length, d))
    table[:, 0::2] = np.sin(position * rate)
    table[:, 1::2] = np.cos(position * rate[:d // 2])
    return table.astype(dtype)


def causal_mask(length: int, dtype=np.float32) -> np.ndarray:
    """Additive mask hiding future positions."""
    return (np.triu(np.ones((length, length)), k=1) * MASK_VALUE).astype(dtype)


class MultiHeadAttention(Module):
    """Scaled dot-product attention over ``n_heads`` heads."""

    def __init__(self, rng: np.random.Generator, d: int, n_heads: int,
                 dtype=np.float32):
        if d % n_heads:
            raise ValueError(f'Model width {d} not divisible by {n_heads}')
        self.n_heads = n_heads
        self.query = Linear(rng, d, d, dtype)
        self.key = Linear(rng, d, d, dtype)
        self.value = Linear(rng, d, d, dtype)
        self.out = Linear(rng, d, d, dtype)
        self.last_weights: Optional[np.ndarray] = None

    def _split(self, x: Tensor) -> Tensor:
        b, n, d = x.shape
        return x.reshape(b, n, self.n_heads, d // self.n_heads) \
            .transpose(0, 2, 1, 3)

    def __call__(self, x: Tensor, source: Tensor,
                 mask: Optional[np.ndarray] = None) -> Tensor:
        b, n, d = x.shape
        q = self._split(self.query(x))
        k = self._split(self.key(source))
        v = self._split(self.value(source))
        scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(d // self.n_heads))
        if mask is not None:
            scores = scores + mask
        weights = scores.softmax(axis=-1)
        self.last_weights = weights.data
        context = (weights @ v).transpose(0, 2, 1, 3).reshape(b, n, d)
        return self.out(context)


class FeedForward(Module):

    def __init__(self, rng: np.random.Generator, d: int, d_ff: int,
                 dtype=np.float32):
        self.inner = Linear(rng, d, d_ff, dtype)
        self.outer = Linear(rng, d_ff, d, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(self.inner(x).gelu())


class EncoderBlock(Module):
    """Pre-norm self-attention block."""

    def __init__(self, rng: np.random.Generator, d: int, n_heads: int,
                 d_ff: int, dropout: float, dtype=np.float32):
        self.norm_attn = LayerNorm(d, dtype)
        self.attn = MultiHeadAttention(rng, d, n_heads, dtype)
        self.norm_ff = LayerNorm(d, dtype)
        self.ff = FeedForward(rng, d, d_ff, dtype)
        self.dropout = dropout

    def __call__(self, x: Tensor, rng: np.random.Generator) -> Tensor:
        h = self.norm_attn(x)
        x = x + self.attn(h, h).dropout(self.dropout, rng, self.training)
        x = x + self.ff(self.norm_ff(x)).dropout(
            self.dropout, rng, self.training
        )
        return x


class DecoderBlock(Module):
    """Pre-norm block with masked self-attention and cross-attention."""

    def __init__(self, rng: np.random.Generator, d: int, n_heads: int,
                 d_ff: int, dropout: float, dtype=np.float32):
        self.norm_self = LayerNorm(d, dtype)
        self.self_attn = MultiHeadAttention(rng, d, n_heads, dtype)
        self.norm_cross = LayerNorm(d, dtype)
        self.cross_attn = MultiHeadAttention(rng, d, n_heads, dtype)
        self.norm_ff = LayerNorm(d, dtype)
        self.ff = FeedForward(rng, d, d_ff, dtype)
        self.dropout = dropout

    def __call__(self, x: Tensor, memory: Tensor, mask: np.ndarray,
                 rng: np.random.Generator) -> Tensor:
        h = self.norm_self(x)
        x = x + self.self_attn(h, h, mask).dropout(
            self.dropout, rng, self.training
        )
        x = x + self.cross_attn(self.norm_cross(x), memory).dropout(
            self.dropout, rng, self.training
        )
        x = x + self.ff(self.norm_ff(x)).dropout(
            self.dropout, rng, self.training
        )
        return x
