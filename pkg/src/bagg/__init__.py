"""Text-classification training with grouped augmentation pooling (BAGG).

Augmented texts derived from the same original are kept together as one
observation; the pooled ("bagg") loss scores each observation once instead
of scoring every text independently, which removes the correlated-sample
bias of treating augmentations as new data points.
"""

__version__ = "0.1.0"

from .augment import (
    AugMethod,
    AugRecord,
    AugmentationPlan,
    augment_observation,
    bt_method,
    eda_method,
)
from .dataset import LabeledCorpus, Observation, SplitSpec, load_jsonl
from .model import ModelParams, loss_bagg, loss_standard, pool, predict
from .trainer import TrainConfig, TrainedModel, evaluate, train
from .translate import DeterministicMockTranslator, HttpTranslator, IdentityTranslator

__all__ = [
    "AugMethod",
    "AugRecord",
    "AugmentationPlan",
    "DeterministicMockTranslator",
    "HttpTranslator",
    "IdentityTranslator",
    "LabeledCorpus",
    "ModelParams",
    "Observation",
    "SplitSpec",
    "TrainConfig",
    "TrainedModel",
    "augment_observation",
    "bt_method",
    "eda_method",
    "evaluate",
    "load_jsonl",
    "loss_bagg",
    "loss_standard",
    "pool",
    "predict",
    "train",
]
