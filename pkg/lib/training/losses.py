"""Loss functions."""


# Imports
from typing import Union

import numpy as np

from lib.neural.tensor import Tensor


# Constants
BCE_EPS = 1e-7


def bce(target: float, p: Union[Tensor, float]) -> Tensor:
    """Mean binary cross entropy ``-t log p - (1 - t) log(1 - p)``.

    ``p`` is clamped to ``[1e-7, 1 - 1e-7]``; soft targets such as 0.5 are
    allowed.
    """
    if not 0.0 <= target <= 1.0:
        raise ValueError(f'Target outside [0, 1]: {target}')
    if not isinstance(p, Tensor):
        p = Tensor(np.asarray(p, dtype=np.float64))
    p = p.clip(BCE_EPS, 1.0 - BCE_EPS)
    loss = -(p.log() * target + (1.0 - p).log() * (1.0 - target))
    return loss.mean()


def cross_entropy(logits: Tensor, targets: np.ndarray, mask: np.ndarray,
                  label_smoothing: float = 0.0) -> Tensor:
    """Token cross entropy averaged over unmasked positions.

    Parameters
    ----------
    logits : Tensor
        ``(batch, length, vocab)``.
    targets : np.ndarray
        ``(batch, length)`` ids.
    mask : np.ndarray
        ``(batch, length)``, 1 for real positions and 0 for padding.
    label_smoothing : float
        Weight of the uniform target distribution.

    Returns
    -------
    Tensor
        Scalar loss; padding contributes no gradient.
    """
    batch, length, vocab = logits.shape
    logp = logits.log_softmax(axis=-1)
    rows = np.arange(batch)[:, None]
    cols = np.arange(length)[None, :]
    nll = -logp[rows, cols, np.asarray(targets, dtype=np.int64)]
    if label_smoothing > 0.0:
        uniform = -logp.mean(axis=-1)
        nll = nll * (1.0 - label_smoothing) + uniform * label_smoothing
    mask = np.asarray(mask, dtype=logits.dtype)
    count = max(float(mask.sum()), 1.0)
    return (nll * mask).sum() / count
