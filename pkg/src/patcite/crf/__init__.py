from .features import FeatureSequence, extract_features
from .model import (
    CrfModel,
    decode_document,
    load_model,
    log_partition,
    save_model,
    viterbi_decode,
)
from .training import TrainConfig, TrainingError, train

__all__ = [
    "CrfModel",
    "FeatureSequence",
    "TrainConfig",
    "TrainingError",
    "decode_document",
    "extract_features",
    "load_model",
    "log_partition",
    "save_model",
    "train",
    "viterbi_decode",
]
