"""Program number to instrument group mapping."""


# Imports
from typing import Dict, Optional, Tuple

from lib.midi.classes import InstrumentGroup, MAX_PROGRAM, MIN_PROGRAM


# 1-based, inclusive program ranges for each group.
GROUP_RANGES: Tuple[Tuple[int, int, InstrumentGroup], ...] = (
    (1, 8, InstrumentGroup.KEYBOARD),
    (9, 16, InstrumentGroup.MALLET),
    (17, 24, InstrumentGroup.ORGAN),
    (25, 32, InstrumentGroup.GUITAR),
    (33, 40, InstrumentGroup.BASS),
    (41, 56, InstrumentGroup.STRINGS),
    (57, 64, InstrumentGroup.BRASS),
    (65, 72, InstrumentGroup.REED),
    (73, 80, InstrumentGroup.FLUTE),
    (81, 96, InstrumentGroup.SYNTH_VOCAL),
    (105, 112, InstrumentGroup.GUITAR),
)

PROGRAM_GROUPS: Dict[int, InstrumentGroup] = {
    program: group
    for lo, hi, group in GROUP_RANGES
    for program in range(lo, hi + 1)
}


def program_to_group(program: int) -> Optional[InstrumentGroup]:
    """Map a 1-based MIDI program number to its instrument group.

    Parameters
    ----------
    program : int
        Program number in 1..128.

    Returns
    -------
    Optional[InstrumentGroup]
        The instrument group, or None if the program is unsupported
        (97-104 and 113-128).

    Raises
    ------
    ValueError
        Raised if the program is out of range.
    """
    if not MIN_PROGRAM <= program <= MAX_PROGRAM:
        raise ValueError(f'Program out of range 1..128: {program}')
    return PROGRAM_GROUPS.get(program)
