"""Synthamt libraries."""

# Imports
from pathlib import Path
from typing import (
    Any, Dict, FrozenSet, Iterable, List, MutableMapping, Tuple,
)
import inspect
import logging
import os


# Project directories
LIB = Path(__file__).parent.absolute()
BASE_DIR = LIB.parent

# Environment
LOG_LEVEL_ENV = 'SYNTHAMT_LOG'

# Types
FrameKey = Tuple[str, str]


class IndentedLoggingAdapter(logging.LoggerAdapter):
    """Logging adapter that indents messages by call depth.

    The adapter remembers the call stack of the previous message. A message
    logged from deeper inside a call that already logged is indented one
    step per logging caller on the shared part of the stack, so nested
    progress reads as a tree:

        Rendering 200 examples.
        ---> Loaded 40 MIDI tracks.
        -------> Skipped broken.mid.

    Frames from masked files never count towards the indentation.
    """

    INDENT = '----'
    ARROW = '---> '

    def __init__(self,
                 logger: logging.Logger,
                 extra: Dict[Any, Any],
                 indent_file_mask: Iterable[str] = frozenset()):
        """Initialize the logging adapter.

        Parameters
        ----------
        logger : logging.Logger
            Logger to adapt.
        extra : Dict[Any, Any]
            Extra arguments.
        indent_file_mask : Iterable[str]
            Files or directories, absolute or relative to the project root,
            whose frames do not add indentation.
        """
        super().__init__(logger, extra)
        self.file_mask: FrozenSet[str] = frozenset(
            m if m.startswith('<') else str((BASE_DIR / m).resolve())
            for m in indent_file_mask
        )
        self.cwd = Path(os.getcwd())
        # Root first: (frame, whether a message was logged from it).
        self.stack: List[Tuple[FrameKey, bool]] = []

    def _masked(self, filename: str) -> bool:
        if filename.startswith('<'):
            return filename in self.file_mask
        path = str(self.cwd / filename)
        return any(path.startswith(mask) for mask in self.file_mask)

    def _caller_frames(self) -> List[FrameKey]:
        """Unmasked frames of the logging caller, root first."""
        skip = {logging.__file__, __file__}
        return [
            (frame.filename, frame.function)
            for frame in reversed(inspect.stack(context=0))
            if frame.filename not in skip and not self._masked(frame.filename)
        ]

    def depth(self, frames: List[FrameKey]) -> int:
        """Indentation of a message logged from ``frames``.

        Updates the remembered stack.
        """
        shared = 0
        while (shared < len(frames) and shared < len(self.stack)
               and self.stack[shared][0] == frames[shared]):
            shared += 1
        depth = sum(logged for _, logged in self.stack[:shared])

        if shared == len(frames) and frames:
            # Logged again from a frame on the old stack; that frame's own
            # earlier message is a sibling, not a parent.
            depth -= self.stack[shared - 1][1]
            self.stack = self.stack[:shared - 1] + [(frames[-1], True)]
        else:
            self.stack = (
                self.stack[:shared]
                + [(f, False) for f in frames[shared:-1]]
                + [(frames[-1], True)]
            ) if frames else []
        return max(depth, 0)

    def process(self,
                msg: str,
                kwargs: MutableMapping) -> Tuple[Any, MutableMapping]:
        depth = self.depth(self._caller_frames())
        if depth:
            return f'{self.INDENT * (depth - 1)}{self.ARROW}{msg}', kwargs
        return msg, kwargs


def level_from_env(default: int = logging.INFO) -> int:
    """Resolve the log level from the environment.

    Parameters
    ----------
    default : int
        Level used when ``SYNTHAMT_LOG`` is unset or not a level name.

    Returns
    -------
    int
        Logging level.
    """
    name = os.environ.get(LOG_LEVEL_ENV, '').strip().upper()
    if not name:
        return default
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else default


# Configure logging
logging.basicConfig(format='%(asctime)-15s %(message)s')
logger = IndentedLoggingAdapter(
    logging.getLogger(__name__),
    {},
    indent_file_mask={
        '<frozen importlib._bootstrap>',
        '<frozen importlib._bootstrap_external>',
        'synthamt.py',
        'lib/subcommands',
    }
)
logger.setLevel(level_from_env())
