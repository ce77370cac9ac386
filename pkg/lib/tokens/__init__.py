"""MIDI-like token vocabulary and codec."""


# Imports
from lib.tokens.codec import (
    DecodedSegment, MAX_LEN, QuantizedSegment, TokenOverflowError, TokenSeq,
    decode, encode, encode_sliced, join_segments, quantize,
)
from lib.tokens.vocab import TokenKind, VOCAB_SIZE, Vocab
