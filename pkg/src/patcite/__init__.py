"""Reference mining for patent full text.

Pipeline stages: tokenize patent text, label tokens with an IOB sequence
model, extract reference spans, parse them into bibliographic fields, and
match them against a publication store.
"""

from .corpus import (
    AnnotationSpan,
    CorpusStats,
    DanglingSpanWarning,
    IobLabel,
    LABELS,
    LabeledDocument,
    Token,
    align_annotations,
    corpus_stats,
    read_brat_spans,
    read_iob,
    tokenize,
    write_iob,
)
from .chunker import (
    Chunk,
    SubwordVocab,
    chunk_document,
    merge_predictions,
    read_chunks,
    subword_tokenize,
    write_chunks,
)
from .errors import DataError, FormatError
from .extract import ReferenceSpan, extract_spans, spans_from_document
from .matcher import (
    MatchResult,
    PipelineCounts,
    PublicationRecord,
    PublicationStore,
    load_publications,
    match_reference,
    run_matching,
)
from .refparse import Pages, ParsedReference, parse_reference

__version__ = "0.1.0"
