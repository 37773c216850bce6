"""Decode chunk dumps with a fine-tuned model and fill the IOB pred column.

Per-position argmax over the three classes; a word takes the prediction at
its first subword, words reassemble in document order via the chunk dump's
word offsets.
"""

from __future__ import annotations

from typing import IO, Sequence

import torch

from .data import LABELS, ChunkRecord, build_tensors, read_iob_rows, write_iob_with_predictions


class PredictionError(RuntimeError):
    pass


def predict_word_labels(
    model: torch.nn.Module,
    chunks: Sequence[ChunkRecord],
    batch_size: int = 32,
) -> dict[str, list[str]]:
    """Per-document word label sequences, keyed by doc_id."""
    input_ids, attention, _ = build_tensors(chunks)
    model.eval()
    label_ids = []
    with torch.no_grad():
        for start in range(0, len(chunks), batch_size):
            logits = model(
                input_ids=input_ids[start : start + batch_size],
                attention_mask=attention[start : start + batch_size],
            ).logits
            if logits.shape[-1] != len(LABELS):
                raise PredictionError(
                    f"classifier emits {logits.shape[-1]} classes, expected {len(LABELS)}"
                )
            label_ids.append(logits.argmax(dim=-1))
    decisions = torch.cat(label_ids, dim=0)

    by_doc: dict[str, dict[int, str]] = {}
    for k, chunk in enumerate(chunks):
        slots = by_doc.setdefault(chunk.doc_id, {})
        for (first, _), offset in zip(chunk.word_spans, chunk.word_offsets):
            if offset in slots:
                raise PredictionError(
                    f"{chunk.doc_id}: word {offset} covered by more than one chunk"
                )
            slots[offset] = LABELS[int(decisions[k, first])]
    out: dict[str, list[str]] = {}
    for doc_id, slots in by_doc.items():
        if set(slots) != set(range(len(slots))):
            raise PredictionError(f"{doc_id}: chunks do not tile the document")
        out[doc_id] = [slots[i] for i in range(len(slots))]
    return out


def fill_iob(
    model: torch.nn.Module,
    chunks: Sequence[ChunkRecord],
    iob_in: IO[str],
    iob_out: IO[str],
    batch_size: int = 32,
) -> None:
    docs = read_iob_rows(iob_in)
    predictions = predict_word_labels(model, chunks, batch_size)
    missing = set(docs) - set(predictions)
    if missing:
        raise PredictionError(f"no chunks for documents: {sorted(missing)}")
    write_iob_with_predictions(docs, predictions, iob_out)
