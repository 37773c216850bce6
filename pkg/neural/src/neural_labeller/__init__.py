"""Fine-tune transformer checkpoints on subword chunk dumps and emit
predictions in the IOB interchange format."""

from .data import LABELS, ChunkRecord, build_tensors, read_chunk_dump
from .finetune import FineTuneConfig, TrainingLog, fine_tune
from .predict import fill_iob, predict_word_labels

__version__ = "0.1.0"
