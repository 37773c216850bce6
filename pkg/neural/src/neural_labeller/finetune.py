"""Fine-tune a token classification head on a chunk dump.

The checkpoint is any BERT-family model loadable by id or local path; the
classifier is the standard single linear layer over three classes. Loss is
computed only at first-subword positions, everything else being masked with
the ignore index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import torch
from transformers import AutoModelForTokenClassification, get_linear_schedule_with_warmup

from .data import LABELS, ChunkRecord, build_tensors


class FineTuneError(RuntimeError):
    pass


@dataclass(frozen=True)
class FineTuneConfig:
    checkpoint: str
    epochs: int = 3
    batch_size: int = 32
    max_len: int = 64
    learning_rate: float = 3e-5
    seed: int = 13


@dataclass
class TrainingLog:
    steps: list[tuple[int, int, float]] = field(default_factory=list)  # epoch, step, loss

    def epoch_means(self) -> list[float]:
        by_epoch: dict[int, list[float]] = {}
        for epoch, _, loss in self.steps:
            by_epoch.setdefault(epoch, []).append(loss)
        return [sum(v) / len(v) for _, v in sorted(by_epoch.items())]

    def write(self, stream) -> None:
        stream.write("epoch\tstep\tloss\n")
        for epoch, step, loss in self.steps:
            stream.write(f"{epoch}\t{step}\t{loss:.6f}\n")


def load_classifier(checkpoint: str):
    model = AutoModelForTokenClassification.from_pretrained(
        checkpoint,
        num_labels=len(LABELS),
        id2label={i: l for i, l in enumerate(LABELS)},
        label2id={l: i for i, l in enumerate(LABELS)},
    )
    if model.num_labels != len(LABELS):
        raise FineTuneError(f"classifier has {model.num_labels} classes, expected {len(LABELS)}")
    return model


def _check_compatibility(model, chunks: Sequence[ChunkRecord], config: FineTuneConfig):
    chunk_len = len(chunks[0].subword_ids)
    if chunk_len != config.max_len:
        raise FineTuneError(
            f"chunk dump uses max_len {chunk_len}, config says {config.max_len}"
        )
    vocab_size = model.config.vocab_size
    highest = max(max(c.subword_ids) for c in chunks)
    if highest >= vocab_size:
        raise FineTuneError(
            f"chunk dump contains subword id {highest} but the checkpoint "
            f"vocabulary has only {vocab_size} entries; the dump was built "
            "against a different vocabulary"
        )
    max_positions = getattr(model.config, "max_position_embeddings", None)
    if max_positions is not None and chunk_len > max_positions:
        raise FineTuneError(
            f"max_len {chunk_len} exceeds the checkpoint's position limit {max_positions}"
        )


def fine_tune(
    chunks: Sequence[ChunkRecord],
    config: FineTuneConfig,
    out_dir: Optional[str] = None,
) -> tuple[torch.nn.Module, TrainingLog]:
    torch.manual_seed(config.seed)
    model = load_classifier(config.checkpoint)
    _check_compatibility(model, chunks, config)
    input_ids, attention, labels = build_tensors(chunks)

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    steps_per_epoch = (len(chunks) + config.batch_size - 1) // config.batch_size
    scheduler = get_linear_schedule_with_warmup(
        optimizer, 0, steps_per_epoch * config.epochs
    )

    log = TrainingLog()
    model.train()
    generator = torch.Generator().manual_seed(config.seed)
    try:
        for epoch in range(1, config.epochs + 1):
            order = torch.randperm(len(chunks), generator=generator)
            for step in range(steps_per_epoch):
                batch = order[step * config.batch_size : (step + 1) * config.batch_size]
                optimizer.zero_grad()
                out = model(
                    input_ids=input_ids[batch],
                    attention_mask=attention[batch],
                    labels=labels[batch],
                )
                out.loss.backward()
                optimizer.step()
                scheduler.step()
                log.steps.append((epoch, step + 1, float(out.loss.item())))
    except torch.cuda.OutOfMemoryError as exc:
        raise FineTuneError(
            f"out of memory at batch_size {config.batch_size}; reduce it and retry"
        ) from exc

    if out_dir is not None:
        model.save_pretrained(out_dir)
        with open(f"{out_dir}/training_log.tsv", "w", encoding="utf-8") as fh:
            log.write(fh)
        with open(f"{out_dir}/finetune_config.json", "w", encoding="utf-8") as fh:
            json.dump(config.__dict__, fh, indent=2)
    return model, log
