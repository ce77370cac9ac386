"""Token vocabulary.

Id layout::

    0..127    pitch tokens
    128..383  time tokens, absolute 10 ms bins within the segment
    384       OFF
    385       ON
    386       BOS
    387       EOS
    388       END_TIE
"""


# Imports
from enum import Enum
from pathlib import Path
from typing import Dict
import json


# Constants
N_PITCHES = 128
N_TIMES = 256
PITCH_BASE = 0
TIME_BASE = PITCH_BASE + N_PITCHES
OFF = TIME_BASE + N_TIMES
ON = OFF + 1
BOS = ON + 1
EOS = BOS + 1
END_TIE = EOS + 1
VOCAB_SIZE = END_TIE + 1
TIME_STEP_S = 0.01


class TokenKind(str, Enum):
    PITCH = 'pitch'
    TIME = 'time'
    OFF = 'off'
    ON = 'on'
    BOS = 'bos'
    EOS = 'eos'
    END_TIE = 'end_tie'


_SPECIAL = {
    OFF: TokenKind.OFF,
    ON: TokenKind.ON,
    BOS: TokenKind.BOS,
    EOS: TokenKind.EOS,
    END_TIE: TokenKind.END_TIE,
}


class Vocab:
    """Constructors and classification of token ids."""

    size = VOCAB_SIZE
    OFF = OFF
    ON = ON
    BOS = BOS
    EOS = EOS
    END_TIE = END_TIE

    @staticmethod
    def pitch(p: int) -> int:
        if not 0 <= p < N_PITCHES:
            raise ValueError(f'Pitch out of range: {p}')
        return PITCH_BASE + p

    @staticmethod
    def time(t: int) -> int:
        if not 0 <= t < N_TIMES:
            raise ValueError(f'Time bin out of range: {t}')
        return TIME_BASE + t

    @staticmethod
    def kind(token: int) -> TokenKind:
        """Classify a token id.

        Raises
        ------
        ValueError
            Raised for ids outside the vocabulary.
        """
        if PITCH_BASE <= token < TIME_BASE:
            return TokenKind.PITCH
        if TIME_BASE <= token < OFF:
            return TokenKind.TIME
        try:
            return _SPECIAL[token]
        except KeyError:
            raise ValueError(f'Token id out of range: {token}') from None

    @staticmethod
    def value(token: int) -> int:
        """Pitch or time bin carried by a pitch or time token."""
        kind = Vocab.kind(token)
        if kind == TokenKind.PITCH:
            return token - PITCH_BASE
        if kind == TokenKind.TIME:
            return token - TIME_BASE
        raise ValueError(f'Token {token} carries no value')

    @staticmethod
    def name(token: int) -> str:
        kind = Vocab.kind(token)
        if kind in (TokenKind.PITCH, TokenKind.TIME):
            return f'{kind.value}_{Vocab.value(token)}'
        return kind.value.upper()

    @classmethod
    def to_json(cls) -> Dict[str, str]:
        """Id to symbolic name for every token."""
        return {str(i): cls.name(i) for i in range(cls.size)}

    @classmethod
    def write_json(cls, path: Path):
        Path(path).write_text(json.dumps(cls.to_json(), indent=1))
