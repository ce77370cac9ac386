"""Versioned binary checkpoint container.

Layout, all integers little-endian::

    8 bytes   magic b'SAMTCKPT'
    uint32    format version
    uint32    JSON blob length, then the UTF-8 JSON blob
    uint32    tensor count, then per tensor:
                uint16 name length, UTF-8 name
                uint8 dtype code (0 float32, 1 float64)
                uint8 ndim, uint32 per dimension
                payload in that dtype, row-major
"""


# Imports
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple
import json
import struct

import numpy as np

from lib import logger


# Constants
MAGIC = b'SAMTCKPT'
VERSION = 2
# Stored dtypes by code; anything else is written as float32.
DTYPES = (np.dtype('<f4'), np.dtype('<f8'))


class CheckpointError(ValueError):
    """Raised for unreadable checkpoints."""


class CheckpointVersionError(CheckpointError):
    """Raised for unsupported versions or mismatching configs."""


@dataclass
class Checkpoint:
    """Decoded checkpoint content.

    Attributes
    ----------
    meta : Dict[str, Any]
        JSON blob: model config, training state.
    tensors : Dict[str, np.ndarray]
        Named float32 or float64 arrays.
    """

    meta: Dict[str, Any] = field(default_factory=dict)
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)

    def section(self, prefix: str) -> Dict[str, np.ndarray]:
        """Tensors under ``prefix.``, with the prefix removed."""
        cut = len(prefix) + 1
        return {
            k[cut:]: v for k, v in self.tensors.items()
            if k.startswith(f'{prefix}.')
        }


def dumps(ckpt: Checkpoint) -> bytes:
    blob = json.dumps(ckpt.meta, sort_keys=True).encode('utf-8')
    parts = [MAGIC, struct.pack('<II', VERSION, len(blob)), blob,
             struct.pack('<I', len(ckpt.tensors))]
    for name, array in ckpt.tensors.items():
        encoded = name.encode('utf-8')
        code = 1 if np.asarray(array).dtype == np.float64 else 0
        array = np.ascontiguousarray(array, dtype=DTYPES[code])
        parts.append(struct.pack('<H', len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack('<BB', code, array.ndim))
        parts.append(struct.pack(f'<{array.ndim}I', *array.shape))
        parts.append(array.tobytes())
    return b''.join(parts)


def _take(data: bytes, offset: int, fmt: str) -> Tuple[tuple, int]:
    size = struct.calcsize(fmt)
    if offset + size > len(data):
        raise CheckpointError(f'Truncated checkpoint at byte {offset}')
    return struct.unpack_from(fmt, data, offset), offset + size


def loads(data: bytes) -> Checkpoint:
    """Decode checkpoint bytes.

    Raises
    ------
    CheckpointError
        Raised on a bad magic or truncated content.
    CheckpointVersionError
        Raised on an unsupported format version.
    """
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointError('Not a checkpoint: bad magic')
    (version, blob_len), offset = _take(data, len(MAGIC), '<II')
    if version != VERSION:
        raise CheckpointVersionError(
            f'Unsupported checkpoint version {version}, expected {VERSION}'
        )
    if offset + blob_len > len(data):
        raise CheckpointError('Truncated checkpoint metadata')
    meta = json.loads(data[offset:offset + blob_len].decode('utf-8'))
    offset += blob_len

    (count,), offset = _take(data, offset, '<I')
    tensors = {}
    for _ in range(count):
        (name_len,), offset = _take(data, offset, '<H')
        name = data[offset:offset + name_len].decode('utf-8')
        offset += name_len
        (code, ndim), offset = _take(data, offset, '<BB')
        if code >= len(DTYPES):
            raise CheckpointError(
                f'Unknown dtype code {code} of tensor {name}'
            )
        dtype = DTYPES[code]
        shape, offset = _take(data, offset, f'<{ndim}I')
        n_values = int(np.prod(shape, dtype=np.int64))
        size = n_values * dtype.itemsize
        if offset + size > len(data):
            raise CheckpointError(f'Truncated payload of tensor {name}')
        tensors[name] = np.frombuffer(
            data, dtype=dtype, count=n_values, offset=offset
        ).reshape(shape).astype(dtype.type)
        offset += size
    return Checkpoint(meta, tensors)


def save_checkpoint(path: Path, ckpt: Checkpoint):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + '.tmp')
    tmp.write_bytes(dumps(ckpt))
    tmp.replace(path)
    logger.info(f'Wrote checkpoint {path}.')


def load_checkpoint(path: Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f'Checkpoint not found: {path}')
    return loads(path.read_bytes())


def require_config(ckpt: Checkpoint, expected: Dict[str, Any],
                   ignore: Tuple[str, ...] = ('dtype', 'dropout', 'seed')):
    """Check that a checkpoint was written for ``expected``.

    Raises
    ------
    CheckpointVersionError
        Raised if an architecture field differs.
    """
    stored = ckpt.meta.get('model', {})
    diff = sorted(
        k for k in set(stored) | set(expected)
        if k not in ignore and stored.get(k) != expected.get(k)
    )
    if diff:
        raise CheckpointVersionError(
            'Checkpoint does not match the model config: '
            + ', '.join(f'{k} ({stored.get(k)} != {expected.get(k)})'
                        for k in diff)
        )
