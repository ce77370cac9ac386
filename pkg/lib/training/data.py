"""Training data sources: rendered datasets, real audio and online rendering."""


# Imports
from __future__ import annotations
from pathlib import Path
from queue import Empty, Full, Queue
from threading import Event, Thread
from typing import Dict, Iterator, List, Optional, Sequence, Tuple
import json

import numpy as np

from lib import logger
from lib.audio.features import SEGMENT_SAMPLES, melspec
from lib.audio.renderer import RenderConfig, example_rng, synth_example
from lib.audio.sample_bank import SampleBank
from lib.audio.wav import read_wav
from lib.midi.classes import SlicedNotes
from lib.midi.pool import MidiPool
from lib.tokens.codec import MAX_LEN, TokenOverflowError, TokenSeq, encode_sliced
from lib.training.sampling import balanced_sampler


# Constants
INDEX_FILE = 'index.json'


# Types
Example = Tuple[np.ndarray, TokenSeq]


class ExampleStore:
    """A rendered dataset directory as ``(mel frames, tokens)`` pairs.

    Examples whose annotation does not fit ``max_len`` tokens are logged and
    skipped when the store is opened.
    """

    def __init__(self, directory: Path, max_len: int = MAX_LEN,
                 cache: bool = True):
        self.directory = Path(directory)
        index_path = self.directory / INDEX_FILE
        if not index_path.is_file():
            raise FileNotFoundError(f'Dataset index not found: {index_path}')
        entries = json.loads(index_path.read_text())['examples']

        self.entries: List[Dict] = []
        self.tokens: List[TokenSeq] = []
        for entry in entries:
            sidecar = json.loads((self.directory / entry['notes']).read_text())
            try:
                tokens = encode_sliced(SlicedNotes.from_dict(sidecar), max_len)
            except TokenOverflowError as e:
                logger.warning(f'Skipping example {entry["index"]}: {e}')
                continue
            self.entries.append(entry)
            self.tokens.append(tokens)
        self._cache: Optional[Dict[int, np.ndarray]] = {} if cache else None
        logger.info(
            f'Opened {self.directory} with {len(self)} of {len(entries)} '
            'examples.'
        )

    def __len__(self) -> int:
        return len(self.entries)

    def mel(self, i: int) -> np.ndarray:
        if self._cache is not None and i in self._cache:
            return self._cache[i]
        audio = read_wav(self.directory / self.entries[i]['audio'])
        frames = melspec(audio).frames
        if self._cache is not None:
            self._cache[i] = frames
        return frames

    def __getitem__(self, i: int) -> Example:
        return self.mel(i), self.tokens[i]

    def notes(self, i: int) -> SlicedNotes:
        sidecar = self.directory / self.entries[i]['notes']
        return SlicedNotes.from_dict(json.loads(sidecar.read_text()))


class MultiStore:
    """Several stores drawn through the balanced sampler."""

    def __init__(self, stores: Sequence[ExampleStore]):
        if not stores:
            raise ValueError('At least one dataset is needed')
        self.stores = list(stores)

    def __len__(self) -> int:
        return sum(len(s) for s in self.stores)

    def draw(self, rng: np.random.Generator, count: int) -> List[Example]:
        sampler = balanced_sampler([len(s) for s in self.stores], rng)
        return [self.stores[d][i] for d, i in
                (next(sampler) for _ in range(count))]


def random_window(samples: np.ndarray, rng: np.random.Generator,
                  length: int = SEGMENT_SAMPLES) -> np.ndarray:
    """A random window of ``length`` samples, zero-padded if short."""
    if len(samples) <= length:
        out = np.zeros(length, dtype=np.float32)
        out[:len(samples)] = samples
        return out
    start = int(rng.integers(0, len(samples) - length + 1))
    return np.asarray(samples[start:start + length], dtype=np.float32)


class RealAudioStore:
    """Unannotated audio files providing random segment windows."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FileNotFoundError(
                f'Real audio directory not found: {self.directory}'
            )
        self.paths = sorted(self.directory.rglob('*.wav'))
        if not self.paths:
            raise FileNotFoundError(f'No WAV files in {self.directory}')
        self.audio = [read_wav(p) for p in self.paths]
        logger.info(f'Loaded {len(self.paths)} real audio files.')

    def __len__(self) -> int:
        return len(self.paths)

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``(count, frames, n_mels)`` mels of random windows."""
        picks = rng.integers(0, len(self.audio), size=count)
        return np.stack([
            melspec(random_window(self.audio[int(i)], rng)).frames
            for i in picks
        ])


class SynthStream:
    """Online rendering of synthetic examples in a producer thread.

    Example ``k`` is rendered from the random stream of ``(seed, k)``, so
    the sequence of examples does not depend on thread timing. Examples
    whose annotation overflows are skipped. ``last_index`` is the index of
    the latest example handed out, so a resumed stream can start after it.
    """

    def __init__(self, pool: MidiPool, bank: SampleBank, cfg: RenderConfig,
                 max_len: int = MAX_LEN, capacity: int = 32, start: int = 0):
        self._pool = pool
        self._bank = bank
        self._cfg = cfg
        self._max_len = max_len
        self._queue: Queue = Queue(maxsize=capacity)
        self._stop = Event()
        self._producer: Optional[Thread] = None
        self._next = start
        self.last_index = start - 1

    def seek(self, start: int):
        """Produce from example ``start`` on; call before entering."""
        if self._producer is not None:
            raise RuntimeError('Cannot seek a running stream')
        self._next = start
        self.last_index = start - 1

    def render(self, k: int) -> Optional[Example]:
        example = synth_example(
            self._pool, self._bank, self._cfg, example_rng(self._cfg.seed, k)
        )
        try:
            tokens = encode_sliced(example.notes, self._max_len)
        except TokenOverflowError as e:
            logger.warning(f'Skipping streamed example {k}: {e}')
            return None
        return melspec(example.audio.samples).frames, tokens

    def _produce(self):
        k = self._next
        while not self._stop.is_set():
            item = self.render(k)
            if item is None:
                k += 1
                continue
            while not self._stop.is_set():
                try:
                    self._queue.put((k, item), timeout=0.1)
                    break
                except Full:
                    continue
            k += 1

    def __enter__(self) -> SynthStream:
        self._producer = Thread(target=self._produce, daemon=True)
        self._producer.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._stop.set()
        if self._producer is not None:
            self._producer.join(timeout=5)

    def get(self, timeout: float = 60.0) -> Example:
        try:
            k, item = self._queue.get(timeout=timeout)
        except Empty:
            raise TimeoutError('Synthetic example producer stalled') from None
        self.last_index = k
        return item

    def draw(self, count: int) -> List[Example]:
        return [self.get() for _ in range(count)]

    def __iter__(self) -> Iterator[Example]:
        while True:
            yield self.get()
