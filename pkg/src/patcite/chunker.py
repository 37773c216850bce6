"""Subword re-tokenization and fixed-length window chunking.

Word tokens are re-tokenized against a pretrained subword vocabulary and the
document is cut into windows of at most ``max_len`` subword positions. Cutting
only happens at word boundaries: a word whose pieces would overflow the open
window starts the next one. Labels stay word-level, one per word, so the
windows carry a many-to-many mapping between subwords and labels.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Optional, Sequence

from .corpus import IobLabel, LabeledDocument
from .errors import DataError, FormatError


class OversizedWordWarning(UserWarning):
    """A single word produced more subwords than fit in one window."""


@dataclass(frozen=True)
class SubwordVocab:
    entries: Mapping[str, int]
    continuation_prefix: str = "##"
    unknown_token: str = "[UNK]"
    start_token: str = "[CLS]"
    end_token: str = "[SEP]"
    pad_token: str = "[PAD]"

    def __post_init__(self):
        if not self.entries:
            raise DataError("empty subword vocabulary")
        specials = (self.unknown_token, self.start_token, self.end_token, self.pad_token)
        missing = [t for t in specials if t not in self.entries]
        if missing:
            raise DataError(f"vocabulary lacks special tokens: {missing}")
        ids = [self.entries[t] for t in specials]
        if len(set(ids)) != len(ids):
            raise DataError("special tokens do not map to distinct ids")

    @property
    def unknown_id(self) -> int:
        return self.entries[self.unknown_token]

    @property
    def start_id(self) -> int:
        return self.entries[self.start_token]

    @property
    def end_id(self) -> int:
        return self.entries[self.end_token]

    @property
    def pad_id(self) -> int:
        return self.entries[self.pad_token]

    @classmethod
    def from_file(cls, stream: IO[str], **kwargs) -> "SubwordVocab":
        """Load a one-subword-per-line vocabulary; line number (0-based) is the id."""
        entries = {}
        for i, line in enumerate(stream):
            entries[line.rstrip("\n")] = i
        return cls(entries=entries, **kwargs)


def subword_tokenize(word: str, vocab: SubwordVocab) -> list[str]:
    """Greedy longest-prefix-match subword split.

    Non-initial pieces carry the continuation prefix. If some remainder has no
    matching vocabulary entry at all, the whole word collapses to the unknown
    token.
    """
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        piece = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = vocab.continuation_prefix + candidate
            if candidate in vocab.entries:
                piece = candidate
                break
            end -= 1
        if piece is None:
            return [vocab.unknown_token]
        pieces.append(piece)
        start = end
    return pieces


@dataclass(frozen=True)
class Chunk:
    """One fixed-length subword window with word-level alignment.

    ``word_spans[i]`` is ``(first_subword_index, subword_count)`` for the i-th
    word in the window; ``word_labels[i]`` its single label; ``word_offsets[i]``
    its token index in the source document.
    """

    doc_id: str
    subword_ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    word_spans: tuple[tuple[int, int], ...]
    word_labels: tuple[IobLabel, ...]
    word_offsets: tuple[int, ...]

    @property
    def n_positions(self) -> int:
        return sum(self.attention_mask)


def chunk_document(
    doc: LabeledDocument,
    vocab: SubwordVocab,
    max_len: int = 64,
    labels: Optional[Sequence[IobLabel]] = None,
) -> list[Chunk]:
    """Split a document into subword windows of at most ``max_len`` positions.

    A window opens with the start token; a word whose pieces plus the closing
    end token would not fit closes the window and opens the next, so words are
    never split across windows. ``labels`` defaults to the document's gold
    labels, or all-O placeholders when it has none.
    """
    if max_len < 3:
        raise ValueError(f"max_len must be at least 3, got {max_len}")
    if not doc.tokens:
        raise DataError(f"document {doc.doc_id!r} has no tokens")
    if labels is None:
        labels = doc.gold_labels or (IobLabel.O,) * len(doc.tokens)
    if len(labels) != len(doc.tokens):
        raise ValueError("one label per token required")

    chunks: list[Chunk] = []
    ids = [vocab.start_id]
    spans: list[tuple[int, int]] = []
    chunk_labels: list[IobLabel] = []
    offsets: list[int] = []

    def close():
        nonlocal ids, spans, chunk_labels, offsets
        ids.append(vocab.end_id)
        mask = [1] * len(ids) + [0] * (max_len - len(ids))
        ids.extend([vocab.pad_id] * (max_len - len(ids)))
        chunks.append(
            Chunk(
                doc.doc_id,
                tuple(ids),
                tuple(mask),
                tuple(spans),
                tuple(chunk_labels),
                tuple(offsets),
            )
        )
        ids = [vocab.start_id]
        spans, chunk_labels, offsets = [], [], []

    for index, (token, label) in enumerate(zip(doc.tokens, labels)):
        pieces = subword_tokenize(token.text, vocab)
        if len(pieces) > max_len - 2:
            warnings.warn(
                f"{doc.doc_id}: token {token.text!r} has {len(pieces)} subwords, "
                f"truncating to {max_len - 2}",
                OversizedWordWarning,
                stacklevel=2,
            )
            pieces = pieces[: max_len - 2]
        if len(ids) + len(pieces) + 1 > max_len:
            close()
        spans.append((len(ids), len(pieces)))
        ids.extend(vocab.entries[p] for p in pieces)
        chunk_labels.append(label)
        offsets.append(index)
    close()
    return chunks


def merge_predictions(
    chunks: Sequence[Chunk],
    per_position_labels: Sequence[Sequence[IobLabel]],
    n_words: Optional[int] = None,
) -> list[IobLabel]:
    """Map per-position window predictions back to one label per document word.

    Each word takes the label predicted at its first subword position. The
    windows must tile one document exactly; pass ``n_words`` to also catch
    missing windows at the document tail.
    """
    if len(chunks) != len(per_position_labels):
        raise ValueError("one label sequence per chunk required")
    by_offset: dict[int, IobLabel] = {}
    doc_ids = {c.doc_id for c in chunks}
    if len(doc_ids) > 1:
        raise DataError(f"chunks from multiple documents: {sorted(doc_ids)}")
    for chunk, position_labels in zip(chunks, per_position_labels):
        if len(position_labels) != chunk.n_positions:
            raise ValueError(
                f"{chunk.doc_id}: expected {chunk.n_positions} position labels, "
                f"got {len(position_labels)}"
            )
        for (first, _), offset in zip(chunk.word_spans, chunk.word_offsets):
            if offset in by_offset:
                raise DataError(f"word {offset} covered by more than one chunk")
            by_offset[offset] = position_labels[first]
    expected = len(by_offset) if n_words is None else n_words
    if set(by_offset) != set(range(expected)):
        raise DataError("chunks do not tile the document")
    return [by_offset[i] for i in range(expected)]


def write_chunks(chunks: Iterable[Chunk], stream: IO[str]) -> None:
    """Serialize chunks as line-delimited JSON records."""
    for chunk in chunks:
        stream.write(
            json.dumps(
                {
                    "doc_id": chunk.doc_id,
                    "subword_ids": list(chunk.subword_ids),
                    "attention_mask": list(chunk.attention_mask),
                    "word_spans": [list(s) for s in chunk.word_spans],
                    "word_labels": [l.value for l in chunk.word_labels],
                    "word_offsets": list(chunk.word_offsets),
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def read_chunks(stream: IO[str], path=None) -> list[Chunk]:
    chunks = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            chunks.append(
                Chunk(
                    rec["doc_id"],
                    tuple(rec["subword_ids"]),
                    tuple(rec["attention_mask"]),
                    tuple((a, b) for a, b in rec["word_spans"]),
                    tuple(IobLabel(l) for l in rec["word_labels"]),
                    tuple(rec["word_offsets"]),
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"bad chunk record: {exc}", line=lineno, path=path)
    return chunks
