"""Link parsed references to a local publication store.

Candidate retrieval is blocked on (normalized first-author surname, year).
Within the candidate set, a fixed cascade of field-subset rules decides the
outcome: a reference is a definite match only when exactly one candidate
satisfies the most specific rule the reference has fields for.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence

from .errors import FormatError
from .extract import ReferenceSpan
from .refparse import ParsedReference, parse_reference

_ABSENT = "_"

DEFAULT_FOCUS_YEARS = (1980, 2010)

# (rule id, required reference fields); evaluated in order, most specific first
MATCH_RULES = (
    ("R1", ("journal", "volume", "first_page")),
    ("R2", ("first_page", "journal")),
    ("R3", ("second_author", "journal")),
    ("R4", ("journal", "volume")),
)


def normalize(text: str) -> str:
    """Case-fold, strip diacritics and periods, collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", text)
    folded = unicodedata.normalize("NFKD", decomposed.casefold())
    kept = "".join(ch for ch in folded if not unicodedata.combining(ch) and ch != ".")
    return " ".join(kept.split())


def _strip_zeros(page: str) -> str:
    stripped = page.lstrip("0")
    return stripped if stripped else "0"


@dataclass(frozen=True)
class PublicationRecord:
    record_id: str
    first_author_surname: str
    author_surnames: tuple[str, ...]
    year: int
    journal_names: frozenset[str]
    volume: Optional[str] = None
    issue: Optional[str] = None
    first_page: Optional[str] = None


@dataclass(frozen=True)
class MatchResult:
    outcome: str  # "definite" | "ambiguous" | "none"
    record_id: Optional[str] = None
    candidate_count: int = 0
    matched_rule: Optional[str] = None

    @property
    def is_definite(self) -> bool:
        return self.outcome == "definite"


NO_MATCH = MatchResult("none")


@dataclass(frozen=True)
class PipelineCounts:
    extracted: int = 0
    in_text_only: int = 0
    in_focus_years: int = 0
    parsed: int = 0
    definite_matches: int = 0

    def __post_init__(self):
        funnel = (
            self.extracted,
            self.in_text_only,
            self.in_focus_years,
            self.parsed,
            self.definite_matches,
        )
        if any(a < b for a, b in zip(funnel, funnel[1:])):
            raise ValueError(f"funnel counts must be monotone, got {funnel}")


class PublicationStore:
    """Immutable-after-load record collection with an author/year index."""

    def __init__(self, records: Iterable[PublicationRecord] = ()):
        self._records: dict[str, PublicationRecord] = {}
        self._index: dict[tuple[str, int], list[PublicationRecord]] = {}
        for record in records:
            self.add(record)

    def add(self, record: PublicationRecord) -> None:
        if record.record_id in self._records:
            raise FormatError(f"duplicate record id {record.record_id!r}")
        self._records[record.record_id] = record
        key = (normalize(record.first_author_surname), record.year)
        self._index.setdefault(key, []).append(record)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records.values())

    def get(self, record_id: str) -> Optional[PublicationRecord]:
        return self._records.get(record_id)

    def candidates(self, first_author: str, year: int) -> list[PublicationRecord]:
        found = self._index.get((normalize(first_author), year), [])
        return sorted(found, key=lambda r: r.record_id)


def _field_present(ref: ParsedReference, name: str) -> bool:
    if name == "journal":
        return ref.journal is not None
    if name == "volume":
        return ref.volume_issue is not None
    if name == "first_page":
        return ref.pages is not None
    if name == "second_author":
        return ref.second_author is not None
    raise ValueError(name)


def _field_agrees(ref: ParsedReference, record: PublicationRecord, name: str) -> bool:
    if name == "journal":
        return normalize(ref.journal) in {normalize(j) for j in record.journal_names}
    if name == "volume":
        return ref.volume_issue in {v for v in (record.volume, record.issue) if v is not None}
    if name == "first_page":
        if record.first_page is None:
            return False
        return _strip_zeros(ref.pages.first_page) == _strip_zeros(record.first_page)
    if name == "second_author":
        others = record.author_surnames[1:]
        return normalize(ref.second_author) in {normalize(a) for a in others}
    raise ValueError(name)


def match_reference(ref: ParsedReference, store: PublicationStore) -> MatchResult:
    """Match against the store; definite only on exactly one qualifying candidate."""
    if ref.first_author is None or ref.year is None:
        return NO_MATCH
    rule = next(
        (
            (rule_id, fields)
            for rule_id, fields in MATCH_RULES
            if all(_field_present(ref, f) for f in fields)
        ),
        None,
    )
    if rule is None:
        return NO_MATCH
    rule_id, fields = rule
    passing = [
        record
        for record in store.candidates(ref.first_author, ref.year)
        if all(_field_agrees(ref, record, f) for f in fields)
    ]
    if len(passing) == 1:
        return MatchResult("definite", passing[0].record_id, 1, rule_id)
    if len(passing) > 1:
        return MatchResult("ambiguous", None, len(passing), rule_id)
    return MatchResult("none", matched_rule=rule_id)


@dataclass
class MatchingReport:
    counts: PipelineCounts
    matches_by_patent: dict[str, tuple[str, ...]] = field(default_factory=dict)


def run_matching(
    spans_by_patent: Mapping[str, Sequence[ReferenceSpan]],
    store: PublicationStore,
    front_page: Optional[Mapping[str, frozenset[str]]] = None,
    focus_years: tuple[int, int] = DEFAULT_FOCUS_YEARS,
) -> MatchingReport:
    """Parse and match all spans, applying the counting funnel per patent.

    Funnel stages: extracted -> not a front-page duplicate -> published in the
    focus years -> parsed well enough to match (author + year) -> definite
    match, with matched record ids de-duplicated within each patent.
    """
    front_page = front_page or {}
    lo, hi = focus_years
    extracted = in_text_only = in_focus = parsed = 0
    matches_by_patent: dict[str, tuple[str, ...]] = {}
    for patent_id in sorted(spans_by_patent):
        fp_ids = front_page.get(patent_id, frozenset())
        unique_matches: dict[str, None] = {}
        for span in spans_by_patent[patent_id]:
            extracted += 1
            ref = parse_reference(span.text)
            result = match_reference(ref, store)
            if result.is_definite and result.record_id in fp_ids:
                continue
            in_text_only += 1
            if ref.year is None or not lo <= ref.year <= hi:
                continue
            in_focus += 1
            if ref.first_author is None:
                continue
            parsed += 1
            if result.is_definite:
                unique_matches[result.record_id] = None
        if unique_matches:
            matches_by_patent[patent_id] = tuple(unique_matches)
    definite = sum(len(ids) for ids in matches_by_patent.values())
    counts = PipelineCounts(extracted, in_text_only, in_focus, parsed, definite)
    return MatchingReport(counts, matches_by_patent)


def load_publications(stream: IO[str], path=None) -> PublicationStore:
    """Read the tab-separated publication store format.

    Columns: record_id, first_author_surname, author_surnames (';'-joined),
    year, journal_names (';'-joined), volume, issue, first_page; '_' = absent.
    """
    store = PublicationStore()
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 8:
            raise FormatError(f"expected 8 columns, got {len(cols)}", line=lineno, path=path)
        record_id, author, authors, year, journals, volume, issue, first_page = cols
        if not record_id or record_id == _ABSENT:
            raise FormatError("missing record_id", line=lineno, path=path)
        try:
            year_value = int(year)
        except ValueError:
            raise FormatError(f"bad year {year!r}", line=lineno, path=path)
        if not journals or journals == _ABSENT:
            journal_names = frozenset()
        else:
            journal_names = frozenset(j for j in journals.split(";") if j)
        record = PublicationRecord(
            record_id=record_id,
            first_author_surname=author,
            author_surnames=tuple(a for a in authors.split(";") if a and a != _ABSENT),
            year=year_value,
            journal_names=journal_names,
            volume=None if volume == _ABSENT else volume,
            issue=None if issue == _ABSENT else issue,
            first_page=None if first_page == _ABSENT else first_page,
        )
        try:
            store.add(record)
        except FormatError as exc:
            raise FormatError(str(exc), line=lineno, path=path)
    return store


def write_publications(records: Iterable[PublicationRecord], stream: IO[str]) -> None:
    for r in sorted(records, key=lambda rec: rec.record_id):
        stream.write(
            "\t".join(
                (
                    r.record_id,
                    r.first_author_surname,
                    ";".join(r.author_surnames) if r.author_surnames else _ABSENT,
                    str(r.year),
                    ";".join(sorted(r.journal_names)) if r.journal_names else _ABSENT,
                    r.volume if r.volume is not None else _ABSENT,
                    r.issue if r.issue is not None else _ABSENT,
                    r.first_page if r.first_page is not None else _ABSENT,
                )
            )
            + "\n"
        )


def read_front_page(stream: IO[str], path=None) -> dict[str, frozenset[str]]:
    """Read 'patent_id TAB record_id' lines into per-patent exclusion sets."""
    sets: dict[str, set[str]] = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise FormatError(f"expected 2 columns, got {len(cols)}", line=lineno, path=path)
        sets.setdefault(cols[0], set()).add(cols[1])
    return {patent: frozenset(ids) for patent, ids in sets.items()}


def format_counts(counts: PipelineCounts) -> str:
    lines = [
        f"extracted\t{counts.extracted}",
        f"in_text_only\t{counts.in_text_only}",
        f"in_focus_years\t{counts.in_focus_years}",
        f"parsed\t{counts.parsed}",
        f"definite_matches\t{counts.definite_matches}",
    ]
    return "\n".join(lines) + "\n"
