"""Run manifests tying artifacts to the config and inputs that made them."""


# Imports
from __future__ import annotations
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List
import hashlib
import json

from lib import logger


# Constants
MANIFEST_FILE = 'manifest.json'
CHUNK = 1 << 20


def file_sha1(path: Path) -> str:
    h = hashlib.sha1()
    with open(path, 'rb') as fd:
        for chunk in iter(lambda: fd.read(CHUNK), b''):
            h.update(chunk)
    return h.hexdigest()


def input_files(paths: Iterable[Path]) -> List[Path]:
    """Files under ``paths``, expanded and sorted."""
    files = set()
    for path in paths:
        path = Path(path)
        if path.is_dir():
            files.update(p for p in path.rglob('*') if p.is_file())
        elif path.is_file():
            files.add(path)
    return sorted(files)


def content_hash(files: Dict[str, str]) -> str:
    """SHA-1 over ``path<TAB>digest`` lines in path order."""
    h = hashlib.sha1()
    for path in sorted(files):
        h.update(f'{path}\t{files[path]}\n'.encode('utf-8'))
    return h.hexdigest()


@dataclass
class RunManifest:
    """What a command ran with and what it produced.

    Attributes
    ----------
    command : str
        Subcommand name.
    seed : int
        Master seed.
    config : Dict[str, Any]
        Config snapshot after overrides.
    inputs : Dict[str, str]
        SHA-1 of every input file.
    artifacts : List[str]
        Paths written by the command.
    """

    command: str
    seed: int
    config: Dict[str, Any] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)

    @classmethod
    def create(cls, command: str, seed: int, config: Dict[str, Any],
               inputs: Iterable[Path] = ()) -> RunManifest:
        files = {str(p): file_sha1(p) for p in input_files(inputs)}
        return cls(command, seed, config, files)

    @property
    def input_hash(self) -> str:
        return content_hash(self.inputs)

    def add(self, *paths: Path):
        self.artifacts.extend(str(p) for p in paths)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'seed': self.seed,
            'config': self.config,
            'input_hash': self.input_hash,
            'inputs': self.inputs,
            'artifacts': sorted(self.artifacts),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> RunManifest:
        return cls(d['command'], int(d['seed']), d.get('config', {}),
                   d.get('inputs', {}), list(d.get('artifacts', [])))

    def write(self, out_dir: Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_FILE
        with open(path, 'w') as fd:
            json.dump(self.to_dict(), fd, indent=2, sort_keys=True)
        logger.debug(f'Wrote manifest {path}.')
        return path


def read_manifest(path: Path) -> RunManifest:
    with open(path, 'r') as fd:
        return RunManifest.from_dict(json.load(fd))
