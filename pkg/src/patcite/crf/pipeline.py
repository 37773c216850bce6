"""Picklable trainer/predictor wrappers for harnesses and parallel decoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..corpus import IobLabel, LabeledDocument
from .model import CrfModel, decode_document
from .training import TrainConfig, train


@dataclass(frozen=True)
class CrfPredictor:
    model: CrfModel

    def __call__(self, doc: LabeledDocument) -> list[IobLabel]:
        return decode_document(self.model, doc)


@dataclass(frozen=True)
class CrfTrainer:
    config: TrainConfig = field(default_factory=TrainConfig)

    def __call__(self, docs: Sequence[LabeledDocument]) -> CrfPredictor:
        return CrfPredictor(train(docs, self.config))
