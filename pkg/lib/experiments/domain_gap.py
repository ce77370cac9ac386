"""Domain-gap experiment.

This experiment measures what adversarial fine-tuning does to the gap
between the synthetic and the real domain. The real domain is built from an
annotated synthetic test set by the corruption chain, so the same notes can
be scored in both domains. For the pre-trained model and for one fine-tuned
copy per mode it reports:

- the held-out accuracy of a fresh domain classifier on frozen encoder
  outputs, and
- the note-level F measure without offsets on the corrupted test audio.
"""


# Imports
from __future__ import annotations
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import json

import numpy as np

from lib import logger
from lib.audio.features import melspec
from lib.audio.realify import RealifyConfig, realify
from lib.audio.renderer import example_rng
from lib.audio.wav import read_wav
from lib.metrics.matching import MatchConfig
from lib.metrics.scores import EvalReport, evaluate_pair
from lib.midi.classes import NoteList
from lib.neural.model import ModelConfig, TranscriptionModel
from lib.training.data import ExampleStore
from lib.training.loop import FinetuneConfig, load_model, run_finetuning
from lib.training.domain_classifier import (
    ClassifierConfig, ClassifierResult, train_domain_classifier,
)
from lib.training.steps import FinetuneMode
from lib.transcription import transcribe_mels


# Constants
REPORT_FILE = 'domain_gap.json'
BASELINE = 'pretrained'


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of the domain-gap experiment.

    Attributes
    ----------
    test_dir : Optional[str]
        Rendered, annotated synthetic test set.
    test_limit : int
        Largest number of test examples used.
    classifier : ClassifierConfig
        Domain classifier training.
    """

    test_dir: Optional[str] = None
    test_limit: int = 64
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)


@dataclass(frozen=True)
class TestSet:
    """Clean and corrupted mels of the same annotated segments."""

    clean: np.ndarray
    corrupted: np.ndarray
    references: Tuple[NoteList, ...]


@dataclass(frozen=True)
class GapMeasurement:
    """Classifier accuracy and corrupted-domain Fn of one model."""

    name: str
    classifier: ClassifierResult
    fn: float
    clean_fn: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'classifier': self.classifier.to_dict(),
            'fn': self.fn,
            'clean_fn': self.clean_fn,
        }


@dataclass
class DomainGapReport:
    baseline: GapMeasurement
    modes: Dict[str, GapMeasurement] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'baseline': self.baseline.to_dict(),
            'modes': {
                mode: {
                    **m.to_dict(),
                    'classifier_accuracy_before':
                        self.baseline.classifier.heldout_accuracy,
                    'classifier_accuracy_after': m.classifier.heldout_accuracy,
                    'fn_before': self.baseline.fn,
                    'fn_after': m.fn,
                }
                for mode, m in self.modes.items()
            },
        }

    def lines(self) -> List[str]:
        rows = [self.baseline, *self.modes.values()]
        width = max(len(r.name) for r in rows)
        return [
            f'{r.name.ljust(width)}  '
            f'classifier {r.classifier.heldout_accuracy:.4f}  '
            f'Fn {r.fn:.4f}  clean Fn {r.clean_fn:.4f}'
            for r in rows
        ]


def build_test_set(directory: Path, max_len: int, limit: int,
                   realify_cfg: RealifyConfig, seed: int) -> TestSet:
    """Load a rendered test set and corrupt every example in memory.

    Example ``i`` is corrupted with the random stream of ``(seed, i)``.
    """
    store = ExampleStore(Path(directory), max_len, cache=False)
    count = min(limit, len(store))
    if count < 2:
        raise ValueError(f'{directory} needs at least two usable examples')
    clean, corrupted, references = [], [], []
    for i in range(count):
        audio = read_wav(store.directory / store.entries[i]['audio'])
        noisy, _ = realify(audio, example_rng(seed, i), realify_cfg)
        clean.append(melspec(audio).frames)
        corrupted.append(melspec(noisy).frames)
        references.append(store.notes(i).notes)
    logger.info(f'Built a test set of {count} clean and corrupted segments.')
    return TestSet(np.stack(clean), np.stack(corrupted), tuple(references))


def mean_fn(model: TranscriptionModel, mels: np.ndarray,
            references: Sequence[NoteList], cfg: MatchConfig,
            threads: int = 1) -> float:
    """Mean note-level F measure without offsets over segments."""
    segments = transcribe_mels(model, mels, threads)
    reports = [
        evaluate_pair(ref, seg.notes, cfg, str(i))
        for i, (ref, seg) in enumerate(zip(references, segments))
    ]
    return EvalReport.mean(reports).fn


def measure(name: str, model: TranscriptionModel, test: TestSet,
            classifier: ClassifierConfig, match: MatchConfig,
            threads: int = 1) -> GapMeasurement:
    logger.info(f'Measuring {name}.')
    result = GapMeasurement(
        name=name,
        classifier=train_domain_classifier(model, test.clean, test.corrupted,
                                           classifier),
        fn=mean_fn(model, test.corrupted, test.references, match, threads),
        clean_fn=mean_fn(model, test.clean, test.references, match, threads),
    )
    logger.info(f'{name}: {result.to_dict()}')
    return result


def run(checkpoint: Path, out_dir: Path, model_cfg: ModelConfig,
        finetune: FinetuneConfig, experiment: ExperimentConfig,
        realify_cfg: RealifyConfig = RealifyConfig(),
        match: MatchConfig = MatchConfig(), seed: int = 0,
        threads: int = 1,
        modes: Sequence[FinetuneMode] = tuple(FinetuneMode)
        ) -> DomainGapReport:
    """Run the domain-gap experiment.

    Parameters
    ----------
    checkpoint : Path
        Pre-trained checkpoint.
    out_dir : Path
        Output directory; each mode fine-tunes into ``out_dir/<mode>`` and
        the report is written to ``out_dir/domain_gap.json``.
    model_cfg : ModelConfig
        Architecture of the checkpoint.
    finetune : FinetuneConfig
        Fine-tuning run; its mode is replaced by each entry of ``modes``.
    experiment : ExperimentConfig
        Test set and classifier settings.
    realify_cfg : RealifyConfig
        Corruption of the test set.
    match : MatchConfig
        Evaluation tolerances.
    seed : int
        Master seed.
    threads : int
        Decoding threads.
    modes : Sequence[FinetuneMode]
        Fine-tuning modes to compare.

    Returns
    -------
    DomainGapReport
        Measurements before and after fine-tuning.
    """
    if experiment.test_dir is None:
        raise FileNotFoundError(
            'The experiment needs an annotated test set: set '
            'experiment.test_dir'
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info('Starting domain-gap experiment.')

    test = build_test_set(Path(experiment.test_dir), model_cfg.max_len,
                          experiment.test_limit, realify_cfg, seed)
    model = load_model(checkpoint, model_cfg)
    report = DomainGapReport(
        measure(BASELINE, model, test, experiment.classifier, match, threads)
    )

    for mode in modes:
        result = run_finetuning(
            model_cfg, replace(finetune, mode=mode), out_dir / mode.value,
            pretrained=checkpoint, seed=seed,
        )
        tuned = load_model(result.checkpoint, model_cfg)
        report.modes[mode.value] = measure(
            mode.value, tuned, test, experiment.classifier, match, threads
        )

    with open(out_dir / REPORT_FILE, 'w') as fd:
        json.dump(report.to_dict(), fd, indent=2)
    for line in report.lines():
        logger.info(line)
    return report
