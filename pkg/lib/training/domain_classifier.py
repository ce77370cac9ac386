"""How well a fresh discriminator tells the domains apart."""


# Imports
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from lib import logger
from lib.neural.model import Discriminator, TranscriptionModel, random_windows
from lib.neural.tensor import Tensor, no_grad
from lib.training.losses import bce
from lib.training.optim import Adam
from lib.training.steps import REAL_LABEL, SYNTHETIC_LABEL


@dataclass(frozen=True)
class ClassifierConfig:
    steps: int = 300
    batch_size: int = 16
    lr: float = 1e-4
    holdout: float = 0.25
    windows_per_example: int = 4
    seed: int = 0


@dataclass(frozen=True)
class ClassifierResult:
    """Window classification accuracy of a domain classifier."""

    train_accuracy: float
    heldout_accuracy: float
    final_loss: float

    def to_dict(self):
        return {
            'train_accuracy': self.train_accuracy,
            'heldout_accuracy': self.heldout_accuracy,
            'final_loss': self.final_loss,
        }


def encode_frozen(model: TranscriptionModel, mels: np.ndarray,
                  chunk: int = 8) -> np.ndarray:
    """Encoder output without a graph, ``(n, frames, d_model)``."""
    model.eval()
    with no_grad():
        parts = [model.encode(mels[i:i + chunk]).data
                 for i in range(0, len(mels), chunk)]
    model.train()
    return np.concatenate(parts)


def _windows(memory: np.ndarray, width: int, count: int,
             rng: np.random.Generator) -> np.ndarray:
    return np.concatenate([
        random_windows(Tensor(memory), width, rng).data for _ in range(count)
    ])


def accuracy(disc: Discriminator, synthetic: np.ndarray,
             real: np.ndarray) -> float:
    with no_grad():
        p_s = disc(Tensor(synthetic)).data
        p_r = disc(Tensor(real)).data
    correct = np.sum(p_s < 0.5) + np.sum(p_r >= 0.5)
    return float(correct / (len(p_s) + len(p_r)))


def split(n: int, holdout: float,
          rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    cut = max(1, int(round(n * holdout)))
    return order[cut:], order[:cut]


def train_domain_classifier(
        model: TranscriptionModel, synthetic_mels: np.ndarray,
        real_mels: np.ndarray,
        cfg: ClassifierConfig = ClassifierConfig()) -> ClassifierResult:
    """Train a fresh discriminator on frozen encoder windows.

    Examples (not windows) are split into a training part and a held-out
    part, so held-out windows come from unseen segments.

    Parameters
    ----------
    model : TranscriptionModel
        Frozen encoder.
    synthetic_mels : np.ndarray
        ``(n, frames, n_mels)`` synthetic-domain segments.
    real_mels : np.ndarray
        ``(m, frames, n_mels)`` real-domain segments.
    cfg : ClassifierConfig
        Classifier training settings.

    Returns
    -------
    ClassifierResult
        Accuracies on training and held-out windows.
    """
    if len(synthetic_mels) < 2 or len(real_mels) < 2:
        raise ValueError(
            'The domain classifier needs at least two segments per domain'
        )
    rng = np.random.default_rng(cfg.seed)
    width = model.cfg.disc_window
    memory_s = encode_frozen(model, synthetic_mels)
    memory_r = encode_frozen(model, real_mels)
    train_s, test_s = split(len(memory_s), cfg.holdout, rng)
    train_r, test_r = split(len(memory_r), cfg.holdout, rng)

    disc = Discriminator(model.cfg, seed=cfg.seed + 1)
    optimizer = Adam(dict(disc.named_parameters()), cfg.lr)
    loss_value = float('nan')
    for _ in range(cfg.steps):
        picks_s = rng.choice(train_s, size=cfg.batch_size)
        picks_r = rng.choice(train_r, size=cfg.batch_size)
        windows_s = random_windows(Tensor(memory_s[picks_s]), width, rng)
        windows_r = random_windows(Tensor(memory_r[picks_r]), width, rng)
        optimizer.zero_grad()
        loss = (bce(SYNTHETIC_LABEL, disc(windows_s))
                + bce(REAL_LABEL, disc(windows_r)))
        loss.backward()
        optimizer.step()
        loss_value = loss.item()

    count = cfg.windows_per_example
    result = ClassifierResult(
        accuracy(disc, _windows(memory_s[train_s], width, count, rng),
                 _windows(memory_r[train_r], width, count, rng)),
        accuracy(disc, _windows(memory_s[test_s], width, count, rng),
                 _windows(memory_r[test_r], width, count, rng)),
        loss_value,
    )
    logger.info(f'Classifier accuracy: {result.to_dict()}')
    return result
