"""Audio: WAV I/O, the one-shot sample bank, rendering and features."""


# Imports
from lib.audio.features import MelSegment, melspec, segment_audio
from lib.audio.renderer import (
    AudioBuffer, NoMatchingMidiError, RenderConfig, SynthExample,
    render_segment, synth_example, velocity_amplitude,
)
from lib.audio.sample_bank import (
    BankResourceError, MixedTimbre, OneShot, SampleBank, draw_mixed_timbre,
    lookup, mix,
)
