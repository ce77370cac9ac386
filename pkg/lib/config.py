"""Run configuration.

A run config is a single YAML or JSON file. It is validated against
``SCHEMA`` before anything else happens and then materialized into the
frozen dataclasses of the modules that use it. Every field has a default,
so an empty file is a valid config. Relative paths are resolved against the
directory of the config file.
"""


# Imports
from __future__ import annotations
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple
import copy

import jsonschema
import yaml

from lib import logger
from lib.audio.realify import RealifyConfig
from lib.audio.renderer import DEFAULT_RELEASE_RANGES, RenderConfig
from lib.experiments.domain_gap import ExperimentConfig
from lib.metrics.matching import MatchConfig
from lib.midi.classes import InstrumentGroup
from lib.neural.model import ModelConfig
from lib.training.loop import FinetuneConfig, TrainConfig
from lib.training.domain_classifier import ClassifierConfig
from lib.training.steps import FinetuneMode


# Constants
DEFAULT_EXAMPLES = 1000
GROUPS = [g.value for g in InstrumentGroup]


def _range(minimum: float = 0.0) -> Dict[str, Any]:
    return {
        'type': 'array',
        'items': {'type': 'number', 'minimum': minimum},
        'minItems': 2,
        'maxItems': 2,
    }


def _section(properties: Dict[str, Any]) -> Dict[str, Any]:
    return {
        'type': 'object',
        'properties': properties,
        'additionalProperties': False,
    }


POSITIVE_INT = {'type': 'integer', 'minimum': 1}
NON_NEGATIVE_INT = {'type': 'integer', 'minimum': 0}
POSITIVE = {'type': 'number', 'exclusiveMinimum': 0}
PROBABILITY = {'type': 'number', 'minimum': 0, 'maximum': 1}
PATH = {'type': 'string', 'minLength': 1}
PATHS = {'type': 'array', 'items': PATH}

SCHEMA: Dict[str, Any] = _section({
    'seed': NON_NEGATIVE_INT,
    'threads': POSITIVE_INT,
    'render': _section({
        'midi_dir': PATH,
        'bank': PATH,
        'examples': POSITIVE_INT,
        'segment_s': POSITIVE,
        'limit_prob': PROBABILITY,
        'limit_range': _range(),
        'mix_timbres': {'type': 'boolean'},
        'release_ranges': {
            'type': 'object',
            'propertyNames': {'enum': GROUPS},
            'additionalProperties': _range(),
        },
        'realify': _section({
            'cutoff_hz': _range(1.0),
            'decay_s': _range(),
            'wet': _range(),
            'snr_db': {
                'type': 'array', 'items': {'type': 'number'},
                'minItems': 2, 'maxItems': 2,
            },
            'order': POSITIVE_INT,
        }),
    }),
    'model': _section({
        'd_model': POSITIVE_INT,
        'n_heads': POSITIVE_INT,
        'd_ff': POSITIVE_INT,
        'enc_layers': POSITIVE_INT,
        'dec_layers': POSITIVE_INT,
        'n_mels': POSITIVE_INT,
        'n_frames': POSITIVE_INT,
        'vocab_size': POSITIVE_INT,
        'max_len': {'type': 'integer', 'minimum': 3},
        'disc_window': POSITIVE_INT,
        'disc_hidden': POSITIVE_INT,
        'leaky_slope': {'type': 'number', 'minimum': 0},
        'head_gain': POSITIVE,
        'dropout': {'type': 'number', 'minimum': 0, 'exclusiveMaximum': 1},
        'dtype': {'enum': ['float32', 'float64']},
        'seed': NON_NEGATIVE_INT,
    }),
    'train': _section({
        'dataset_dirs': PATHS,
        'online': {'type': 'boolean'},
        'steps': NON_NEGATIVE_INT,
        'batch_size': POSITIVE_INT,
        'lr': POSITIVE,
        'checkpoint_every': NON_NEGATIVE_INT,
        'log_every': POSITIVE_INT,
        'label_smoothing': {'type': 'number', 'minimum': 0, 'maximum': 1},
    }),
    'finetune': _section({
        'dataset_dirs': PATHS,
        'real_dir': PATH,
        'mode': {'enum': [m.value for m in FinetuneMode]},
        'steps': NON_NEGATIVE_INT,
        'batch_size': POSITIVE_INT,
        'lr_model': POSITIVE,
        'lr_disc': POSITIVE,
        'lambda': {'type': 'number', 'minimum': 0},
        'disc_steps': POSITIVE_INT,
        'checkpoint_every': NON_NEGATIVE_INT,
        'log_every': POSITIVE_INT,
        'label_smoothing': {'type': 'number', 'minimum': 0, 'maximum': 1},
    }),
    'evaluate': _section({
        'onset_tol_s': POSITIVE,
        'offset_tol_s': POSITIVE,
        'offset_ratio': {'type': 'number', 'minimum': 0},
        'frame_hop_s': POSITIVE,
    }),
    'experiment': _section({
        'test_dir': PATH,
        'test_limit': POSITIVE_INT,
        'classifier': _section({
            'steps': NON_NEGATIVE_INT,
            'batch_size': POSITIVE_INT,
            'lr': POSITIVE,
            'holdout': {'type': 'number', 'exclusiveMinimum': 0,
                        'exclusiveMaximum': 1},
            'windows_per_example': POSITIVE_INT,
        }),
    }),
})

PATH_KEYS = {
    'render': ('midi_dir', 'bank'),
    'finetune': ('real_dir',),
    'experiment': ('test_dir',),
}
PATH_LIST_KEYS = {
    'train': ('dataset_dirs',),
    'finetune': ('dataset_dirs',),
}


class ConfigError(ValueError):
    """Raised for invalid config files and missing inputs.

    Attributes
    ----------
    path : str
        Location of the problem: a file path or a ``section.key`` path.
    """

    def __init__(self, message: str, path: str = ''):
        super().__init__(f'{path}: {message}' if path else message)
        self.path = path


@dataclass(frozen=True)
class RunConfig:
    """Materialized run config.

    Attributes
    ----------
    seed : int
        Master seed; the default seed of every section.
    threads : int
        Worker threads of rendering, transcription and evaluation.
    midi_dir : Optional[Path]
        MIDI pool directory.
    bank : Optional[Path]
        Sample bank manifest.
    examples : int
        Number of examples ``render`` writes.
    render : RenderConfig
        Rendering settings.
    realify : RealifyConfig
        Real-domain corruption ranges.
    model : ModelConfig
        Architecture.
    train : TrainConfig
        Pre-training run.
    finetune : FinetuneConfig
        Fine-tuning run.
    match : MatchConfig
        Evaluation tolerances.
    experiment : ExperimentConfig
        Domain-gap experiment settings.
    snapshot : Dict[str, Any]
        Validated config content with overrides applied.
    source : Optional[Path]
        File the config was read from.
    """

    seed: int = 0
    threads: int = 1
    midi_dir: Optional[Path] = None
    bank: Optional[Path] = None
    examples: int = DEFAULT_EXAMPLES
    render: RenderConfig = field(default_factory=RenderConfig)
    realify: RealifyConfig = field(default_factory=RealifyConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    match: MatchConfig = field(default_factory=MatchConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    snapshot: Dict[str, Any] = field(default_factory=dict, compare=False)
    source: Optional[Path] = None

    def require_path(self, value: Optional[Path], key: str,
                     directory: bool = True) -> Path:
        """Return an existing input path or raise a ConfigError naming it."""
        if value is None:
            raise ConfigError('not configured', key)
        exists = value.is_dir() if directory else value.is_file()
        if not exists:
            raise ConfigError(f'{value} does not exist', key)
        return value


def merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``overrides`` into a copy of ``base``."""
    result = copy.deepcopy(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(result.get(key), dict):
            result[key] = merge(result[key], value)
        elif isinstance(value, Mapping):
            result[key] = merge({}, value)
        else:
            result[key] = value
    return result


def validate(raw: Any):
    """Check ``raw`` against the schema.

    Raises
    ------
    ConfigError
        Raised with the dotted location of the first violation.
    """
    try:
        jsonschema.validate(instance=raw, schema=SCHEMA)
    except jsonschema.ValidationError as e:
        location = '.'.join(str(p) for p in e.absolute_path) or '<root>'
        raise ConfigError(e.message, location) from None


def _resolve(raw: Dict[str, Any], base: Path) -> Dict[str, Any]:
    raw = copy.deepcopy(raw)
    for section, keys in PATH_KEYS.items():
        for key in keys:
            if key in raw.get(section, {}):
                raw[section][key] = str(base / raw[section][key])
    for section, keys in PATH_LIST_KEYS.items():
        for key in keys:
            if key in raw.get(section, {}):
                raw[section][key] = [str(base / p) for p in raw[section][key]]
    return raw


def _pair(value, default):
    return tuple(float(v) for v in value) if value is not None else default


def from_dict(raw: Dict[str, Any], source: Optional[Path] = None) -> RunConfig:
    """Validate and materialize a config dictionary.

    Raises
    ------
    ConfigError
        Raised for schema violations and invalid values.
    """
    validate(raw)
    seed = int(raw.get('seed', 0))
    render = raw.get('render', {})
    realify = render.get('realify', {})
    train = raw.get('train', {})
    finetune = raw.get('finetune', {})
    evaluate = raw.get('evaluate', {})
    experiment = raw.get('experiment', {})

    try:
        release_ranges = dict(DEFAULT_RELEASE_RANGES)
        release_ranges.update({
            InstrumentGroup(g): _pair(r, None)
            for g, r in render.get('release_ranges', {}).items()
        })
        render_cfg = RenderConfig(
            release_ranges=release_ranges,
            limit_prob=render.get('limit_prob', RenderConfig.limit_prob),
            limit_range=_pair(render.get('limit_range'),
                              RenderConfig.limit_range),
            segment_s=render.get('segment_s', RenderConfig.segment_s),
            mix_timbres=render.get('mix_timbres', True),
            seed=seed,
        )
        realify_cfg = RealifyConfig(
            cutoff_hz=_pair(realify.get('cutoff_hz'), RealifyConfig.cutoff_hz),
            decay_s=_pair(realify.get('decay_s'), RealifyConfig.decay_s),
            wet=_pair(realify.get('wet'), RealifyConfig.wet),
            snr_db=_pair(realify.get('snr_db'), RealifyConfig.snr_db),
            order=realify.get('order', RealifyConfig.order),
        )
        model_cfg = ModelConfig.from_dict({'seed': seed, **raw.get('model', {})})
        train_cfg = TrainConfig(**{
            **train, 'dataset_dirs': tuple(train.get('dataset_dirs', ())),
        })
        finetune_cfg = FinetuneConfig(**{
            **{k: v for k, v in finetune.items() if k != 'lambda'},
            'dataset_dirs': tuple(finetune.get('dataset_dirs', ())),
            'mode': FinetuneMode(finetune.get('mode', 'confusion')),
            'lambda_': finetune.get('lambda', FinetuneConfig.lambda_),
        })
        match_cfg = MatchConfig(**evaluate)
        classifier_cfg = ClassifierConfig(
            **{'seed': seed, **experiment.get('classifier', {})}
        )
        experiment_cfg = ExperimentConfig(
            test_dir=experiment.get('test_dir'),
            test_limit=experiment.get('test_limit', ExperimentConfig.test_limit),
            classifier=classifier_cfg,
        )
    except ValueError as e:
        raise ConfigError(str(e), str(source or '<config>')) from e

    return RunConfig(
        seed=seed,
        threads=int(raw.get('threads', 1)),
        midi_dir=Path(render['midi_dir']) if 'midi_dir' in render else None,
        bank=Path(render['bank']) if 'bank' in render else None,
        examples=int(render.get('examples', DEFAULT_EXAMPLES)),
        render=render_cfg,
        realify=realify_cfg,
        model=model_cfg,
        train=train_cfg,
        finetune=finetune_cfg,
        match=match_cfg,
        experiment=experiment_cfg,
        snapshot=raw,
        source=source,
    )


def load_config(path: Optional[Path] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Read, override, validate and materialize a run config.

    Parameters
    ----------
    path : Optional[Path]
        YAML or JSON file. Without a file the defaults are used.
    overrides : Optional[Mapping[str, Any]]
        Nested values that replace file values, such as
        ``{'seed': 3, 'finetune': {'mode': 'adaptation'}}``. ``None``
        values are ignored.

    Returns
    -------
    RunConfig
        Materialized config.

    Raises
    ------
    ConfigError
        Raised for unreadable files and invalid content.
    """
    raw: Any = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError('config file not found', str(path))
        try:
            with open(path, 'r') as fd:
                raw = yaml.safe_load(fd)
        except yaml.YAMLError as e:
            raise ConfigError(f'unreadable config: {e}', str(path)) from e
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError('config must be a mapping', str(path))
        raw = _resolve(raw, path.parent)
    raw = merge(raw, overrides or {})
    cfg = from_dict(raw, path)
    logger.debug(f'Loaded config {path or "<defaults>"}: {raw}')
    return cfg
