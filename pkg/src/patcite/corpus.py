"""Patent text tokenization, annotation alignment, and the IOB interchange format.

Tokenization deliberately ignores sentence and paragraph structure: the text is
split on whitespace and punctuation only, so that annotation offsets survive
round trips and no token recombination is ever needed.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Optional, Sequence

from .errors import DataError, FormatError

DEFAULT_ABBREVIATIONS = frozenset({"al."})


class IobLabel(str, Enum):
    B = "B"
    I = "I"
    O = "O"

    def __str__(self):
        return self.value


#: Canonical label order used for deterministic tie-breaking everywhere.
LABELS = (IobLabel.B, IobLabel.I, IobLabel.O)
LABEL_TO_INDEX = {label: i for i, label in enumerate(LABELS)}


class DanglingSpanWarning(UserWarning):
    """An annotation span covers no token (typically whitespace only)."""


@dataclass(frozen=True)
class Token:
    """A single word or punctuation token with character offsets into its source."""

    text: str
    start: int
    end: int
    pos: Optional[str] = None


@dataclass(frozen=True)
class AnnotationSpan:
    """Character-offset annotation, e.g. one reference marked in BRAT."""

    start: int
    end: int
    kind: str = "Reference"


@dataclass(frozen=True)
class LabeledDocument:
    doc_id: str
    tokens: tuple[Token, ...]
    gold_labels: Optional[tuple[IobLabel, ...]] = None
    pred_labels: Optional[tuple[IobLabel, ...]] = None

    def __post_init__(self):
        for name in ("gold_labels", "pred_labels"):
            labels = getattr(self, name)
            if labels is not None and len(labels) != len(self.tokens):
                raise ValueError(
                    f"{self.doc_id}: {name} has {len(labels)} entries "
                    f"for {len(self.tokens)} tokens"
                )

    def with_pred(self, pred_labels: Sequence[IobLabel]) -> "LabeledDocument":
        return LabeledDocument(
            self.doc_id, self.tokens, self.gold_labels, tuple(pred_labels)
        )


@dataclass(frozen=True)
class CorpusStats:
    n_documents: int
    n_references: int
    n_b_tokens: int
    n_i_tokens: int
    mean_reference_length: Optional[float]

    @property
    def n_reference_tokens(self) -> int:
        return self.n_b_tokens + self.n_i_tokens


def is_well_formed(labels: Iterable[IobLabel]) -> bool:
    """True if every I is preceded by a B or another I."""
    prev = IobLabel.O
    for label in labels:
        if label == IobLabel.I and prev == IobLabel.O:
            return False
        prev = label
    return True


def _is_punct(ch: str) -> bool:
    return not ch.isalnum() and not ch.isspace()


_NONSPACE_RUN = re.compile(r"\S+")


def tokenize(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[Token]:
    """Split text into word and punctuation tokens, ignoring all whitespace.

    Every punctuation character becomes its own token, with two exceptions:

    * inside a whitespace-delimited unit that contains a digit but no letter
      (volume/page patterns like "22:981-993"), interior punctuation is kept;
      punctuation at either edge of such a unit still splits off;
    * a trailing period stays attached when the combined token is in the
      abbreviation set (so "al." survives as one token).
    """
    tokens: list[Token] = []
    for match in _NONSPACE_RUN.finditer(text):
        start, end = match.start(), match.end()
        unit = match.group()
        has_digit = any(ch.isdigit() for ch in unit)
        has_alpha = any(ch.isalpha() for ch in unit)
        if has_digit and not has_alpha:
            _split_numeric_unit(text, start, end, tokens)
        else:
            _split_word_unit(text, start, end, abbreviations, tokens)
    return tokens


def _split_numeric_unit(text: str, start: int, end: int, out: list[Token]) -> None:
    lo, hi = start, end
    while lo < hi and _is_punct(text[lo]):
        lo += 1
    while hi > lo and _is_punct(text[hi - 1]):
        hi -= 1
    for i in range(start, lo):
        out.append(Token(text[i], i, i + 1))
    out.append(Token(text[lo:hi], lo, hi))
    for i in range(hi, end):
        out.append(Token(text[i], i, i + 1))


def _split_word_unit(
    text: str, start: int, end: int, abbreviations: frozenset[str], out: list[Token]
) -> None:
    i = start
    while i < end:
        if _is_punct(text[i]):
            merged = False
            if text[i] == "." and out and out[-1].end == i:
                candidate = out[-1].text + "."
                if candidate in abbreviations:
                    out[-1] = Token(candidate, out[-1].start, i + 1)
                    merged = True
            if not merged:
                out.append(Token(text[i], i, i + 1))
            i += 1
        else:
            j = i
            while j < end and not _is_punct(text[j]):
                j += 1
            out.append(Token(text[i:j], i, j))
            i = j


def align_annotations(
    text: str,
    tokens: Sequence[Token],
    spans: Sequence[AnnotationSpan],
    doc_id: str = "",
) -> LabeledDocument:
    """Project character-offset spans onto tokens as IOB labels.

    The first token overlapping a span gets B, the rest of the overlapping
    tokens get I, everything else O. A span covering no token raises a
    DanglingSpanWarning; offsets outside the text are a hard error.
    """
    labels = [IobLabel.O] * len(tokens)
    for span in spans:
        if span.start < 0 or span.end > len(text) or span.start >= span.end:
            raise DataError(
                f"{doc_id}: span [{span.start}, {span.end}) out of range "
                f"for text of length {len(text)}"
            )
        overlapping = [
            i
            for i, tok in enumerate(tokens)
            if tok.start < span.end and tok.end > span.start
        ]
        if not overlapping:
            warnings.warn(
                f"{doc_id}: span [{span.start}, {span.end}) covers no token",
                DanglingSpanWarning,
                stacklevel=2,
            )
            continue
        first = True
        for i in overlapping:
            if labels[i] != IobLabel.O:
                continue  # already claimed by an earlier span (shared token)
            labels[i] = IobLabel.B if first else IobLabel.I
            first = False
    return LabeledDocument(doc_id, tuple(tokens), tuple(labels))


_BRAT_TEXTBOUND = re.compile(r"^(T\d+)\t(\S+) (\d+) (\d+)\t(.*)$")


def read_brat_spans(stream: IO[str], text: str, path=None) -> list[AnnotationSpan]:
    """Read textbound annotations from a BRAT standoff .ann stream.

    Only T lines are consumed; relations, events and comments are skipped.
    """
    spans = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line or not line.startswith("T"):
            continue
        m = _BRAT_TEXTBOUND.match(line)
        if m is None:
            raise FormatError(f"unparseable textbound annotation: {line!r}",
                              line=lineno, path=path)
        _, kind, start, end, surface = m.groups()
        start, end = int(start), int(end)
        if end > len(text) or start >= end:
            raise FormatError(f"span [{start}, {end}) out of range",
                              line=lineno, path=path)
        if text[start:end] != surface:
            raise FormatError(
                f"annotation surface {surface!r} does not match text "
                f"{text[start:end]!r}",
                line=lineno, path=path,
            )
        spans.append(AnnotationSpan(start, end, kind))
    spans.sort(key=lambda s: s.start)
    for a, b in zip(spans, spans[1:]):
        if b.start < a.end:
            raise FormatError(f"overlapping spans at offsets {a.end} and {b.start}",
                              path=path)
    return spans


_DOC_HEADER = re.compile(r"^# doc_id = (.+)$")
_ABSENT = "_"


def read_iob(stream: IO[str], path=None) -> list[LabeledDocument]:
    """Read documents from the tab-separated IOB interchange format.

    Token offsets are synthesized against the space-joined token text, since
    the format does not carry the original character positions.
    """
    docs: list[LabeledDocument] = []
    doc_id = None
    rows: list[tuple[str, Optional[str], str, str]] = []
    start_line = 0

    def flush(lineno):
        nonlocal doc_id, rows
        if doc_id is None:
            return
        if not rows:
            raise FormatError(f"document {doc_id!r} has no tokens",
                              line=start_line, path=path)
        docs.append(_rows_to_document(doc_id, rows, start_line, path))
        doc_id, rows = None, []

    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            flush(lineno)
            continue
        header = _DOC_HEADER.match(line)
        if header:
            flush(lineno)
            doc_id = header.group(1)
            start_line = lineno
            continue
        if doc_id is None:
            raise FormatError("token line before any '# doc_id =' header",
                              line=lineno, path=path)
        cols = line.split("\t")
        if len(cols) != 4:
            raise FormatError(f"expected 4 tab-separated columns, got {len(cols)}",
                              line=lineno, path=path)
        text, pos, gold, pred = cols
        if not text or any(ch.isspace() for ch in text):
            raise FormatError(f"bad token text {text!r}", line=lineno, path=path)
        for raw in (gold, pred):
            if raw != _ABSENT and raw not in ("B", "I", "O"):
                raise FormatError(f"unknown label {raw!r}", line=lineno, path=path)
        rows.append((text, None if pos == _ABSENT else pos, gold, pred))
    flush(None)
    return docs


def _rows_to_document(doc_id, rows, start_line, path) -> LabeledDocument:
    tokens = []
    offset = 0
    for text, pos, _, _ in rows:
        tokens.append(Token(text, offset, offset + len(text), pos))
        offset += len(text) + 1
    labels: dict[str, Optional[tuple[IobLabel, ...]]] = {}
    for name, column in (("gold", [r[2] for r in rows]), ("pred", [r[3] for r in rows])):
        present = [c for c in column if c != _ABSENT]
        if not present:
            labels[name] = None
        elif len(present) == len(column):
            labels[name] = tuple(IobLabel(c) for c in column)
        else:
            raise FormatError(
                f"document {doc_id!r} mixes {name} labels and '{_ABSENT}'",
                line=start_line, path=path,
            )
    return LabeledDocument(doc_id, tuple(tokens), labels["gold"], labels["pred"])


def write_iob(docs: Iterable[LabeledDocument], stream: IO[str]) -> None:
    """Write documents in the canonical IOB interchange serialization."""
    for n, doc in enumerate(docs):
        if n:
            stream.write("\n")
        stream.write(f"# doc_id = {doc.doc_id}\n")
        gold = doc.gold_labels or [None] * len(doc.tokens)
        pred = doc.pred_labels or [None] * len(doc.tokens)
        for tok, g, p in zip(doc.tokens, gold, pred):
            stream.write(
                "\t".join(
                    (
                        tok.text,
                        tok.pos if tok.pos is not None else _ABSENT,
                        g.value if g is not None else _ABSENT,
                        p.value if p is not None else _ABSENT,
                    )
                )
                + "\n"
            )


def count_spans(labels: Sequence[IobLabel]) -> int:
    """Number of spans under the extraction rule: B, or I after O / at start."""
    count = 0
    prev = IobLabel.O
    for label in labels:
        if label == IobLabel.B or (label == IobLabel.I and prev == IobLabel.O):
            count += 1
        prev = label
    return count


def corpus_stats(docs: Sequence[LabeledDocument]) -> CorpusStats:
    for doc in docs:
        if doc.gold_labels is None:
            raise DataError(f"document {doc.doc_id!r} has no gold labels")
    n_b = sum(doc.gold_labels.count(IobLabel.B) for doc in docs)
    n_i = sum(doc.gold_labels.count(IobLabel.I) for doc in docs)
    n_refs = sum(count_spans(doc.gold_labels) for doc in docs)
    mean = (n_b + n_i) / n_refs if n_refs else None
    return CorpusStats(len(docs), n_refs, n_b, n_i, mean)


def fallback_pos(text: str) -> str:
    """Coarse POS class for when no tagger output is available.

    NUM: contains a digit, no letter. PUNCT: punctuation only.
    CAP: starts uppercase. WORD: everything else.
    """
    if all(_is_punct(ch) for ch in text):
        return "PUNCT"
    if any(ch.isdigit() for ch in text) and not any(ch.isalpha() for ch in text):
        return "NUM"
    if text[:1].isupper():
        return "CAP"
    return "WORD"
