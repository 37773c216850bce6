"""Readers and writers for the pipeline's file interfaces.

The chunk dump is line-delimited JSON with per-chunk subword ids, attention
mask, word alignment and word labels. Labels are supervised at the first
subword of each word; every other position (special tokens, padding, and
continuation subwords) is loss-masked with -100.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Sequence

import torch

LABELS = ("B", "I", "O")
LABEL_TO_ID = {label: i for i, label in enumerate(LABELS)}
IGNORE_INDEX = -100
ABSENT = "_"


class ChunkFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ChunkRecord:
    doc_id: str
    subword_ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    word_spans: tuple[tuple[int, int], ...]
    word_labels: tuple[str, ...]
    word_offsets: tuple[int, ...]

    @property
    def n_positions(self) -> int:
        return sum(self.attention_mask)


def read_chunk_dump(stream: IO[str]) -> list[ChunkRecord]:
    chunks = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            chunk = ChunkRecord(
                rec["doc_id"],
                tuple(rec["subword_ids"]),
                tuple(rec["attention_mask"]),
                tuple((a, b) for a, b in rec["word_spans"]),
                tuple(rec["word_labels"]),
                tuple(rec["word_offsets"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ChunkFormatError(f"line {lineno}: bad chunk record: {exc}")
        for label in chunk.word_labels:
            if label not in LABEL_TO_ID:
                raise ChunkFormatError(f"line {lineno}: unknown label {label!r}")
        chunks.append(chunk)
    if not chunks:
        raise ChunkFormatError("empty chunk dump")
    lengths = {len(c.subword_ids) for c in chunks}
    if len(lengths) != 1:
        raise ChunkFormatError(f"inconsistent chunk lengths: {sorted(lengths)}")
    return chunks


def build_tensors(chunks: Sequence[ChunkRecord]):
    """Stack a chunk list into (input_ids, attention_mask, labels) tensors.

    labels carry the word's class id at its first subword position and
    IGNORE_INDEX everywhere else.
    """
    max_len = len(chunks[0].subword_ids)
    input_ids = torch.zeros((len(chunks), max_len), dtype=torch.long)
    attention = torch.zeros((len(chunks), max_len), dtype=torch.long)
    labels = torch.full((len(chunks), max_len), IGNORE_INDEX, dtype=torch.long)
    for k, chunk in enumerate(chunks):
        input_ids[k] = torch.tensor(chunk.subword_ids, dtype=torch.long)
        attention[k] = torch.tensor(chunk.attention_mask, dtype=torch.long)
        for (first, _), label in zip(chunk.word_spans, chunk.word_labels):
            labels[k, first] = LABEL_TO_ID[label]
    return input_ids, attention, labels


def read_vocab_size(stream: IO[str]) -> int:
    return sum(1 for _ in stream)


@dataclass(frozen=True)
class IobRow:
    token: str
    pos: str
    gold: str


def read_iob_rows(stream: IO[str]) -> dict[str, list[IobRow]]:
    """Minimal interchange reader: token, POS and gold columns per document."""
    docs: dict[str, list[IobRow]] = {}
    current = None
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            current = None
            continue
        if line.startswith("# doc_id = "):
            current = line[len("# doc_id = "):]
            if current in docs:
                raise ChunkFormatError(f"line {lineno}: duplicate document {current!r}")
            docs[current] = []
            continue
        if current is None:
            raise ChunkFormatError(f"line {lineno}: token line before document header")
        cols = line.split("\t")
        if len(cols) != 4:
            raise ChunkFormatError(f"line {lineno}: expected 4 columns, got {len(cols)}")
        docs[current].append(IobRow(cols[0], cols[1], cols[2]))
    return docs


def write_iob_with_predictions(
    docs: dict[str, list[IobRow]],
    predictions: dict[str, Sequence[str]],
    stream: IO[str],
) -> None:
    for n, (doc_id, rows) in enumerate(docs.items()):
        if doc_id not in predictions:
            raise ChunkFormatError(f"no predictions for document {doc_id!r}")
        pred = predictions[doc_id]
        if len(pred) != len(rows):
            raise ChunkFormatError(
                f"{doc_id}: {len(pred)} predictions for {len(rows)} tokens"
            )
        if n:
            stream.write("\n")
        stream.write(f"# doc_id = {doc_id}\n")
        for row, label in zip(rows, pred):
            stream.write(f"{row.token}\t{row.pos}\t{row.gold}\t{label}\n")
