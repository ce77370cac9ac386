"""Pre-training, adversarial fine-tuning and balanced sampling."""


# Imports
from lib.training.data import (
    ExampleStore, MultiStore, RealAudioStore, SynthStream,
)
from lib.training.loop import (
    FinetuneConfig, RunResult, TrainConfig, load_model, run_finetuning,
    run_pretraining,
)
from lib.training.domain_classifier import (
    ClassifierConfig, ClassifierResult, train_domain_classifier,
)
from lib.training.losses import bce, cross_entropy
from lib.training.optim import Adam
from lib.training.sampling import SamplingPlan, balanced_sampler
from lib.training.steps import (
    FinetuneMode, LossReport, NonFiniteLossError, confusion_step, make_batch,
    pretrain_step,
)
