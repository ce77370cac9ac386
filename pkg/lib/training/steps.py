"""Single optimization steps for pre-training and fine-tuning."""


# Imports
from __future__ import annotations
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from lib import logger
from lib.neural.model import Discriminator, TranscriptionModel, random_windows
from lib.neural.tensor import no_grad
from lib.tokens.codec import TokenSeq
from lib.tokens.vocab import EOS
from lib.training.losses import bce, cross_entropy
from lib.training.optim import Adam


# Constants
DEFAULT_LAMBDA = 0.01
SYNTHETIC_LABEL = 0.0
REAL_LABEL = 1.0


class FinetuneMode(str, Enum):
    """Adversarial objective for the transcriber.

    ``confusion`` pushes the discriminator output of both domains to 0.5;
    ``adaptation`` pushes it to the real-domain label 1.0.
    """

    CONFUSION = 'confusion'
    ADAPTATION = 'adaptation'

    @property
    def target(self) -> float:
        return 0.5 if self is FinetuneMode.CONFUSION else 1.0


@dataclass
class LossReport:
    """Losses of one step; one JSON-lines record in the training log."""

    step: int
    transcription_ce: float
    disc_loss: Optional[float] = None
    adv_loss: Optional[float] = None
    lambda_: Optional[float] = None
    mode: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d['lambda'] = d.pop('lambda_')
        return {k: v for k, v in d.items() if v is not None}

    def is_finite(self) -> bool:
        return all(
            np.isfinite(v) for k, v in asdict(self).items()
            if isinstance(v, float)
        )


class NonFiniteLossError(FloatingPointError):
    """Raised when a step produces a NaN or infinite loss.

    Attributes
    ----------
    seed : Optional[int]
        Seed of the batch that failed.
    report : LossReport
        Losses at failure.
    """

    def __init__(self, seed: Optional[int], report: LossReport):
        super().__init__(
            f'Non-finite loss at step {report.step} (batch seed {seed}): '
            f'{report.to_dict()}'
        )
        self.seed = seed
        self.report = report


@dataclass(eq=False)
class TokenBatch:
    """Teacher-forcing batch.

    Attributes
    ----------
    mels : np.ndarray
        ``(batch, frames, n_mels)``.
    inputs : np.ndarray
        ``(batch, length)`` decoder inputs, starting with BOS.
    targets : np.ndarray
        ``(batch, length)`` next tokens.
    mask : np.ndarray
        ``(batch, length)``, 0 on padding.
    seed : Optional[int]
        Seed the batch was drawn with.
    """

    mels: np.ndarray
    inputs: np.ndarray
    targets: np.ndarray
    mask: np.ndarray
    seed: Optional[int] = None

    def __len__(self) -> int:
        return len(self.mels)


def make_batch(mels: Sequence[np.ndarray], seqs: Sequence[TokenSeq],
               seed: Optional[int] = None) -> TokenBatch:
    """Pad token sequences into a shifted teacher-forcing batch."""
    if len(mels) != len(seqs) or not seqs:
        raise ValueError('A batch needs one token sequence per mel segment')
    length = max(len(s) for s in seqs) - 1
    inputs = np.full((len(seqs), length), EOS, dtype=np.int64)
    targets = np.full((len(seqs), length), EOS, dtype=np.int64)
    mask = np.zeros((len(seqs), length), dtype=np.float32)
    for i, seq in enumerate(seqs):
        ids = np.asarray(seq.ids, dtype=np.int64)
        n = len(ids) - 1
        inputs[i, :n] = ids[:-1]
        targets[i, :n] = ids[1:]
        mask[i, :n] = 1.0
    return TokenBatch(np.stack(mels), inputs, targets, mask, seed)


def _check(report: LossReport, seed: Optional[int]):
    if not report.is_finite():
        logger.error(f'Non-finite losses for batch seed {seed}.')
        raise NonFiniteLossError(seed, report)


def pretrain_step(model: TranscriptionModel, batch: TokenBatch,
                  optimizer: Adam, step: int,
                  label_smoothing: float = 0.0) -> LossReport:
    """One cross-entropy update of encoder and decoder.

    Raises
    ------
    NonFiniteLossError
        Raised before the update if the loss is not finite.
    """
    model.train()
    optimizer.zero_grad()
    logits = model(batch.mels, batch.inputs)
    loss = cross_entropy(logits, batch.targets, batch.mask, label_smoothing)
    report = LossReport(step, loss.item())
    _check(report, batch.seed)
    loss.backward()
    optimizer.step()
    return report


def discriminator_phase(model: TranscriptionModel, disc: Discriminator,
                        synthetic: np.ndarray, real: np.ndarray,
                        optimizer: Adam, rng: np.random.Generator) -> float:
    """Update only the discriminator on detached encoder windows.

    Minimizes ``BCE(0, C(E(x_S))) + BCE(1, C(E(x_R)))``.

    Returns
    -------
    float
        Discriminator loss before the update.
    """
    width = disc.cfg.disc_window
    with no_grad():
        windows_s = random_windows(model.encode(synthetic), width, rng)
        windows_r = random_windows(model.encode(real), width, rng)
    optimizer.zero_grad()
    loss = (bce(SYNTHETIC_LABEL, disc(windows_s.detach()))
            + bce(REAL_LABEL, disc(windows_r.detach())))
    value = loss.item()
    if np.isfinite(value):
        loss.backward()
        optimizer.step()
    return value


def transcriber_phase(model: TranscriptionModel, disc: Discriminator,
                      batch: TokenBatch, real: np.ndarray, optimizer: Adam,
                      rng: np.random.Generator, target: float, lambda_: float,
                      label_smoothing: float = 0.0) -> Tuple[float, float]:
    """Update encoder and decoder with transcription plus adversarial loss.

    Minimizes ``CE + lambda * (BCE(t, C(E(x_S))) + BCE(t, C(E(x_R))))``.
    The discriminator's gradients are discarded.

    Returns
    -------
    Tuple[float, float]
        Cross entropy and adversarial loss before the update.
    """
    width = disc.cfg.disc_window
    optimizer.zero_grad()
    disc.zero_grad()
    memory_s = model.encode(batch.mels)
    memory_r = model.encode(real)
    ce = cross_entropy(model.decode_logits(memory_s, batch.inputs),
                       batch.targets, batch.mask, label_smoothing)
    adv = (bce(target, disc(random_windows(memory_s, width, rng)))
           + bce(target, disc(random_windows(memory_r, width, rng))))
    values = ce.item(), adv.item()
    if np.all(np.isfinite(values)):
        (ce + adv * lambda_).backward()
        optimizer.step()
    disc.zero_grad()
    return values


def confusion_step(model: TranscriptionModel, disc: Discriminator,
                   batch: TokenBatch, real: np.ndarray, opt_model: Adam,
                   opt_disc: Adam, rng: np.random.Generator, step: int,
                   mode: FinetuneMode = FinetuneMode.CONFUSION,
                   lambda_: float = DEFAULT_LAMBDA, disc_steps: int = 1,
                   label_smoothing: float = 0.0) -> LossReport:
    """One alternation: discriminator phase(s), then transcriber phase.

    Parameters
    ----------
    model : TranscriptionModel
        Encoder E and decoder D.
    disc : Discriminator
        Discriminator C.
    batch : TokenBatch
        Annotated synthetic batch.
    real : np.ndarray
        ``(batch, frames, n_mels)`` unannotated real-domain mels.
    opt_model : Adam
        Optimizer over E and D.
    opt_disc : Adam
        Optimizer over C.
    rng : np.random.Generator
        Source of the discriminator windows.
    step : int
        Step number for the report.
    mode : FinetuneMode
        Adversarial target.
    lambda_ : float
        Weight of the adversarial term.
    disc_steps : int
        Discriminator updates per transcriber update.
    label_smoothing : float
        Passed to the cross entropy.

    Returns
    -------
    LossReport
        Losses of the step.

    Raises
    ------
    NonFiniteLossError
        Raised if any loss is not finite.
    """
    if not len(batch) or not len(real):
        raise ValueError('Both the synthetic and the real batch are needed')
    model.train()
    disc_loss = float('nan')
    for _ in range(disc_steps):
        disc_loss = discriminator_phase(
            model, disc, batch.mels, real, opt_disc, rng
        )
        if not np.isfinite(disc_loss):
            break
    values = None
    if np.isfinite(disc_loss):
        values = transcriber_phase(
            model, disc, batch, real, opt_model, rng, mode.target, lambda_,
            label_smoothing,
        )
    report = LossReport(
        step,
        float(values[0]) if values is not None else float('nan'),
        disc_loss,
        float(values[1]) if values is not None else float('nan'),
        lambda_,
        mode.value,
    )
    _check(report, batch.seed)
    return report
