"""Arguments and helpers shared by the subcommands."""


# Imports
from argparse import ArgumentParser, Namespace
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, TypeVar

from lib.config import RunConfig, load_config


# Types
T = TypeVar('T')
R = TypeVar('R')


def add_config_arguments(parser: ArgumentParser, out: bool = True,
                         threads: bool = True):
    """Add ``--config``, ``--seed`` and optionally ``--threads``/``--out``."""
    parser.add_argument(
        '--config',
        type=Path,
        help='Run config (YAML or JSON). Defaults are used without one.',
    )
    parser.add_argument(
        '--seed',
        type=int,
        help='Master seed. Overrides the config.',
    )
    if threads:
        parser.add_argument(
            '--threads',
            type=int,
            help='Worker threads. Overrides the config. With 1 thread every '
                 'output is bitwise reproducible.',
        )
    if out:
        parser.add_argument(
            '--out',
            type=Path,
            required=True,
            help='Output directory.',
        )


def overrides(argv: Namespace) -> Dict[str, Any]:
    """Config overrides from the common flags."""
    result: Dict[str, Any] = {
        'seed': getattr(argv, 'seed', None),
        'threads': getattr(argv, 'threads', None),
    }
    mode = getattr(argv, 'mode', None)
    if mode is not None:
        result['finetune'] = {'mode': mode}
    return result


def run_config(argv: Namespace) -> RunConfig:
    return load_config(argv.config, overrides(argv))


def fan_out(fn: Callable[[T], R], items: Iterable[T],
            threads: int) -> List[R]:
    """Map ``fn`` over ``items`` in order, on ``threads`` workers."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))
