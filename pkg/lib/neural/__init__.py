"""Autodiff tensors, the transcription model and the discriminator."""


# Imports
from lib.neural.checkpoint import (
    Checkpoint, CheckpointError, CheckpointVersionError, load_checkpoint,
    save_checkpoint,
)
from lib.neural.model import (
    Discriminator, ModelConfig, TranscriptionModel, parameter_count,
    random_windows,
)
from lib.neural.tensor import Tensor, no_grad
