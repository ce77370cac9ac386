"""Pre-training and fine-tuning runs with logs, checkpoints and resume."""


# Imports
from __future__ import annotations
from contextlib import ExitStack
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import json

import numpy as np

from lib import logger
from lib.audio.renderer import RenderConfig
from lib.audio.sample_bank import SampleBank
from lib.midi.pool import load_midi_pool
from lib.neural.checkpoint import (
    Checkpoint, load_checkpoint, require_config, save_checkpoint,
)
from lib.neural.layers import Module
from lib.neural.model import Discriminator, ModelConfig, TranscriptionModel
from lib.tokens.vocab import Vocab
from lib.training.data import (
    Example, ExampleStore, MultiStore, RealAudioStore, SynthStream,
)
from lib.training.optim import Adam
from lib.training.steps import (
    DEFAULT_LAMBDA, FinetuneMode, LossReport, confusion_step, make_batch,
    pretrain_step,
)


# Constants
LOG_FILE = 'train.jsonl'
LAST_CHECKPOINT = 'last.ckpt'
VOCAB_FILE = 'vocab.json'
PRETRAIN = 'pretrain'
FINETUNE = 'finetune'


# Types
Source = Union[MultiStore, SynthStream]


@dataclass(frozen=True)
class TrainConfig:
    """Pre-training run.

    Attributes
    ----------
    dataset_dirs : Tuple[str, ...]
        Rendered datasets, drawn through the balanced sampler.
    online : bool
        Render examples in a producer thread instead of reading datasets.
    steps : int
        Optimizer steps.
    batch_size : int
        Segments per step.
    lr : float
        Adam learning rate.
    checkpoint_every : int
        Steps between numbered checkpoints.
    log_every : int
        Steps between progress log lines.
    label_smoothing : float
        Cross-entropy label smoothing.
    """

    dataset_dirs: Tuple[str, ...] = ()
    online: bool = False
    steps: int = 2000
    batch_size: int = 8
    lr: float = 1e-4
    checkpoint_every: int = 250
    log_every: int = 10
    label_smoothing: float = 0.0


@dataclass(frozen=True)
class FinetuneConfig:
    """Adversarial fine-tuning run.

    Attributes
    ----------
    dataset_dirs : Tuple[str, ...]
        Annotated synthetic datasets.
    real_dir : Optional[str]
        Directory of unannotated real-domain WAV files.
    mode : FinetuneMode
        ``confusion`` or ``adaptation``.
    steps : int
        Alternations.
    batch_size : int
        Segments per domain and step.
    lr_model : float
        Learning rate of encoder and decoder.
    lr_disc : float
        Learning rate of the discriminator.
    lambda_ : float
        Weight of the adversarial term.
    disc_steps : int
        Discriminator updates per transcriber update.
    checkpoint_every : int
        Steps between numbered checkpoints.
    log_every : int
        Steps between progress log lines.
    label_smoothing : float
        Cross-entropy label smoothing.
    """

    dataset_dirs: Tuple[str, ...] = ()
    real_dir: Optional[str] = None
    mode: FinetuneMode = FinetuneMode.CONFUSION
    steps: int = 500
    batch_size: int = 8
    lr_model: float = 1e-5
    lr_disc: float = 1e-4
    lambda_: float = DEFAULT_LAMBDA
    disc_steps: int = 1
    checkpoint_every: int = 250
    log_every: int = 10
    label_smoothing: float = 0.0


@dataclass
class RunResult:
    """Where a run left its artifacts."""

    out_dir: Path
    checkpoint: Path
    log: Path
    reports: List[LossReport] = field(default_factory=list)

    @property
    def artifacts(self) -> List[Path]:
        return [self.checkpoint, self.log, self.out_dir / VOCAB_FILE]


def batch_seed(seed: int, step: int) -> int:
    """Seed of the batch drawn at ``step``."""
    return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])


def restore_model(ckpt: Checkpoint,
                  cfg: Optional[ModelConfig] = None) -> TranscriptionModel:
    """Build a model from a checkpoint.

    Parameters
    ----------
    ckpt : Checkpoint
        Checkpoint with a ``model`` section.
    cfg : Optional[ModelConfig]
        Expected architecture. Defaults to the stored one.

    Raises
    ------
    CheckpointVersionError
        Raised if ``cfg`` does not match the stored architecture.
    """
    stored = ModelConfig.from_dict(ckpt.meta.get('model', {}))
    if cfg is None:
        cfg = stored
    else:
        require_config(ckpt, cfg.to_dict())
    model = TranscriptionModel(cfg)
    model.load_state_dict(ckpt.section('model'))
    state = ckpt.meta.get('dropout_rng')
    if state is not None:
        model.dropout_rng.bit_generator.state = state
    return model


def load_model(path: Path,
               cfg: Optional[ModelConfig] = None) -> TranscriptionModel:
    return restore_model(load_checkpoint(path), cfg)


def _tensors(modules: Dict[str, Module],
             optimizers: Dict[str, Adam]) -> Dict[str, np.ndarray]:
    tensors = {}
    for prefix, module in modules.items():
        tensors.update(
            {f'{prefix}.{k}': v for k, v in module.state_dict().items()}
        )
    for prefix, optimizer in optimizers.items():
        tensors.update(
            {f'{prefix}.{k}': v for k, v in optimizer.state_dict().items()}
        )
    return tensors


def _restore_optimizers(ckpt: Checkpoint, optimizers: Dict[str, Adam]):
    counts = ckpt.meta.get('adam_t', {})
    for prefix, optimizer in optimizers.items():
        optimizer.load_state_dict(ckpt.section(prefix), int(counts[prefix]))


class _Run:
    """Shared bookkeeping of a training run: logs and checkpoints."""

    def __init__(self, kind: str, out_dir: Path, model: TranscriptionModel,
                 modules: Dict[str, Module], optimizers: Dict[str, Adam],
                 meta: Dict[str, Any], checkpoint_every: int, log_every: int,
                 resumed: bool):
        self.kind = kind
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.model = model
        self.modules = modules
        self.optimizers = optimizers
        self.meta = meta
        self.checkpoint_every = checkpoint_every
        self.log_every = log_every
        self.log_path = self.out_dir / LOG_FILE
        self.reports: List[LossReport] = []
        Vocab.write_json(self.out_dir / VOCAB_FILE)
        self._log = open(self.log_path, 'a' if resumed else 'w')

    def close(self):
        self._log.close()

    def record(self, report: LossReport):
        self.reports.append(report)
        self._log.write(json.dumps(report.to_dict()) + '\n')
        self._log.flush()
        if report.step % self.log_every == 0:
            logger.info(f'{self.kind} step {report.step}: {report.to_dict()}')

    def checkpoint(self, step: int, **state) -> Checkpoint:
        meta = {
            **self.meta,
            'kind': self.kind,
            'step': step,
            'model': self.model.cfg.to_dict(),
            'adam_t': {p: o.t for p, o in self.optimizers.items()},
            'dropout_rng': self.model.dropout_rng.bit_generator.state,
            **state,
        }
        return Checkpoint(meta, _tensors(self.modules, self.optimizers))

    def save(self, step: int, final: bool = False,
             **state) -> Optional[Path]:
        """Write the numbered and the latest checkpoint when due."""
        numbered = bool(self.checkpoint_every)
        numbered = numbered and step % self.checkpoint_every == 0
        if not (numbered or final):
            return None
        ckpt = self.checkpoint(step, **state)
        if numbered:
            save_checkpoint(self.out_dir / f'step_{step:06d}.ckpt', ckpt)
        path = self.out_dir / LAST_CHECKPOINT
        save_checkpoint(path, ckpt)
        return path


def _draw(source: Source, rng: np.random.Generator,
          count: int) -> List[Example]:
    if isinstance(source, SynthStream):
        return source.draw(count)
    return source.draw(rng, count)


def _stores(dirs: Sequence[str], max_len: int) -> MultiStore:
    if not dirs:
        raise FileNotFoundError('No rendered dataset directory configured')
    return MultiStore([ExampleStore(Path(d), max_len) for d in dirs])


def open_source(cfg: TrainConfig, model_cfg: ModelConfig,
                render: Optional[RenderConfig] = None,
                bank: Optional[SampleBank] = None,
                midi_dir: Optional[Path] = None,
                start: int = 0) -> Source:
    """The pre-training example source: datasets or online rendering."""
    if not cfg.online:
        return _stores(cfg.dataset_dirs, model_cfg.max_len)
    if render is None or bank is None or midi_dir is None:
        raise ValueError(
            'Online training needs a render config, a sample bank and a '
            'MIDI directory'
        )
    pool = load_midi_pool(Path(midi_dir))
    return SynthStream(pool, bank, render, model_cfg.max_len, start=start)


def run_pretraining(model_cfg: ModelConfig, cfg: TrainConfig, out_dir: Path,
                    seed: int = 0, source: Optional[Source] = None,
                    resume: Optional[Path] = None) -> RunResult:
    """Pre-train encoder and decoder on annotated synthetic segments.

    Parameters
    ----------
    model_cfg : ModelConfig
        Architecture.
    cfg : TrainConfig
        Run settings.
    out_dir : Path
        Output directory for ``train.jsonl``, checkpoints and
        ``vocab.json``.
    seed : int
        Master seed; the batch of step ``s`` is drawn with
        ``batch_seed(seed, s)``.
    source : Optional[Source]
        Example source. Defaults to the configured datasets.
    resume : Optional[Path]
        Checkpoint of an interrupted run of the same config.

    Returns
    -------
    RunResult
        Final checkpoint, log path and the reports of this invocation.
    """
    ckpt = load_checkpoint(resume) if resume else None
    model = (restore_model(ckpt, model_cfg) if ckpt
             else TranscriptionModel(model_cfg))
    optimizer = Adam(dict(model.named_parameters()), cfg.lr)
    first = 1
    if ckpt is not None:
        _restore_optimizers(ckpt, {'adam': optimizer})
        first = int(ckpt.meta['step']) + 1
        logger.info(f'Resuming pre-training at step {first}.')
    if source is None:
        source = _stores(cfg.dataset_dirs, model_cfg.max_len)
    if isinstance(source, SynthStream) and ckpt is not None:
        source.seek(int(ckpt.meta.get('stream_index', -1)) + 1)

    run = _Run(PRETRAIN, out_dir, model, {'model': model},
               {'adam': optimizer}, {'seed': seed, 'train': _jsonable(cfg)},
               cfg.checkpoint_every, cfg.log_every, ckpt is not None)
    logger.info(
        f'Pre-training for {cfg.steps} steps with batch size '
        f'{cfg.batch_size}.'
    )
    path = Path(out_dir) / LAST_CHECKPOINT
    with ExitStack() as stack:
        stack.callback(run.close)
        if isinstance(source, SynthStream):
            stack.enter_context(source)

        def state() -> Dict[str, Any]:
            if isinstance(source, SynthStream):
                return {'stream_index': source.last_index}
            return {}

        for step in range(first, cfg.steps + 1):
            bseed = batch_seed(seed, step)
            examples = _draw(source, np.random.default_rng(bseed),
                             cfg.batch_size)
            batch = make_batch([m for m, _ in examples],
                               [t for _, t in examples], bseed)
            run.record(pretrain_step(model, batch, optimizer, step,
                                     cfg.label_smoothing))
            path = run.save(step, step == cfg.steps, **state()) or path
    return RunResult(Path(out_dir), path, run.log_path, run.reports)


def run_finetuning(model_cfg: ModelConfig, cfg: FinetuneConfig,
                   out_dir: Path, pretrained: Optional[Path] = None,
                   seed: int = 0, resume: Optional[Path] = None,
                   source: Optional[MultiStore] = None,
                   real: Optional[RealAudioStore] = None) -> RunResult:
    """Alternate discriminator and transcriber updates.

    Parameters
    ----------
    model_cfg : ModelConfig
        Architecture; must match the checkpoints.
    cfg : FinetuneConfig
        Run settings, including the mode and the adversarial weight.
    out_dir : Path
        Output directory.
    pretrained : Optional[Path]
        Pre-trained checkpoint to start from.
    seed : int
        Master seed.
    resume : Optional[Path]
        Fine-tuning checkpoint to continue; replaces ``pretrained``.
    source : Optional[MultiStore]
        Annotated synthetic examples. Defaults to the configured datasets.
    real : Optional[RealAudioStore]
        Unannotated real-domain audio. Defaults to ``cfg.real_dir``.

    Raises
    ------
    FileNotFoundError
        Raised if no real-domain audio directory is available.
    CheckpointVersionError
        Raised if a checkpoint does not match ``model_cfg``.
    """
    if real is None:
        if not cfg.real_dir:
            raise FileNotFoundError(
                'Fine-tuning needs unannotated real audio: set '
                'finetune.real_dir'
            )
        real = RealAudioStore(Path(cfg.real_dir))
    if pretrained is None and resume is None:
        raise FileNotFoundError('Fine-tuning needs a pre-trained checkpoint')

    ckpt = load_checkpoint(resume or pretrained)
    model = restore_model(ckpt, model_cfg)
    disc = Discriminator(model_cfg, seed=seed + 1)
    opt_model = Adam(dict(model.named_parameters()), cfg.lr_model)
    opt_disc = Adam(dict(disc.named_parameters()), cfg.lr_disc)
    first = 1
    if resume is not None:
        if ckpt.meta.get('kind') != FINETUNE:
            raise ValueError(f'{resume} is not a fine-tuning checkpoint')
        disc.load_state_dict(ckpt.section('disc'))
        _restore_optimizers(ckpt, {'adam': opt_model, 'adam_disc': opt_disc})
        first = int(ckpt.meta['step']) + 1
        logger.info(f'Resuming fine-tuning at step {first}.')
    if source is None:
        source = _stores(cfg.dataset_dirs, model_cfg.max_len)

    run = _Run(FINETUNE, out_dir, model, {'model': model, 'disc': disc},
               {'adam': opt_model, 'adam_disc': opt_disc},
               {'seed': seed, 'finetune': _jsonable(cfg),
                'mode': cfg.mode.value, 'lambda': cfg.lambda_},
               cfg.checkpoint_every, cfg.log_every, resume is not None)
    logger.info(
        f'Fine-tuning ({cfg.mode.value}, lambda {cfg.lambda_}) for '
        f'{cfg.steps} steps.'
    )
    path = Path(out_dir) / LAST_CHECKPOINT
    try:
        for step in range(first, cfg.steps + 1):
            bseed = batch_seed(seed, step)
            rng = np.random.default_rng(bseed)
            examples = source.draw(rng, cfg.batch_size)
            batch = make_batch([m for m, _ in examples],
                               [t for _, t in examples], bseed)
            real_mels = real.draw(rng, cfg.batch_size)
            run.record(confusion_step(
                model, disc, batch, real_mels, opt_model, opt_disc, rng,
                step, cfg.mode, cfg.lambda_, cfg.disc_steps,
                cfg.label_smoothing,
            ))
            path = run.save(step, step == cfg.steps) or path
    finally:
        run.close()
    return RunResult(Path(out_dir), path, run.log_path, run.reports)


def _jsonable(cfg) -> Dict[str, Any]:
    d = asdict(cfg)
    for k, v in d.items():
        if isinstance(v, FinetuneMode):
            d[k] = v.value
        elif isinstance(v, tuple):
            d[k] = list(v)
    return d
