"""Turn predicted label sequences into reference spans.

Predicted sequences are not guaranteed to be well-formed IOB, so a span starts
at any B, and also at an I whose predecessor is O (or the document start). It
ends right before the next O or B.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .corpus import IobLabel, LabeledDocument, Token
from .errors import DataError, FormatError


@dataclass(frozen=True)
class ReferenceSpan:
    doc_id: str
    first_token: int
    last_token: int  # inclusive
    text: str


def extract_spans(
    labels: Sequence[IobLabel],
    tokens: Sequence[Token],
    doc_id: str = "",
) -> list[ReferenceSpan]:
    if len(labels) != len(tokens):
        raise ValueError("labels and tokens must have the same length")
    spans: list[ReferenceSpan] = []
    start = None

    def close(end):
        spans.append(
            ReferenceSpan(
                doc_id,
                start,
                end,
                " ".join(tok.text for tok in tokens[start : end + 1]),
            )
        )

    for i, label in enumerate(labels):
        if label == IobLabel.B:
            if start is not None:
                close(i - 1)
            start = i
        elif label == IobLabel.I:
            if start is None:
                start = i
        else:
            if start is not None:
                close(i - 1)
                start = None
    if start is not None:
        close(len(labels) - 1)
    return spans


def spans_from_document(doc: LabeledDocument, which: str = "pred") -> list[ReferenceSpan]:
    labels = doc.pred_labels if which == "pred" else doc.gold_labels
    if labels is None:
        raise DataError(f"document {doc.doc_id!r} has no {which} labels")
    return extract_spans(labels, doc.tokens, doc.doc_id)


def write_spans(spans: Iterable[ReferenceSpan], stream: IO[str]) -> None:
    for span in spans:
        stream.write(f"{span.doc_id}\t{span.first_token}\t{span.last_token}\t{span.text}\n")


def read_spans(stream: IO[str], path=None) -> list[ReferenceSpan]:
    spans = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise FormatError(f"expected 4 columns, got {len(cols)}", line=lineno, path=path)
        try:
            spans.append(ReferenceSpan(cols[0], int(cols[1]), int(cols[2]), cols[3]))
        except ValueError as exc:
            raise FormatError(f"bad span record: {exc}", line=lineno, path=path)
    return spans
