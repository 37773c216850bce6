"""Parse an extracted reference string into bibliographic fields.

The input is whitespace-tokenized text as produced by span extraction (so
punctuation usually stands alone: "Nuc . Acids Res . 31:3166-3173 , 2003").
Fields are pulled out by a cascade of patterns, ordered from most to least
reliable: year, then volume/pages, then authors, then journal as the residue.
Anything that does not match simply yields an absent field; parsing never
fails.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import IO, Iterable, Optional

from .errors import FormatError

_ABSENT = "_"

_YEAR = re.compile(r"(19|20)\d\d")
_VOL_PAGES = re.compile(r"(\d+):(\d+)[-–—](\d+)")
_PAGES = re.compile(r"(\d+)[-–—](\d+)")
_VOL_FIRST = re.compile(r"(\d+):(\d+)")
_SURNAME = re.compile(r"[A-ZÀ-Þ][a-zß-ÿ]+(?:[-'][A-Za-zÀ-ÿ]+)*")
_INITIAL = re.compile(r"[A-Z]\.?")

_SEPARATORS = frozenset({",", ";", "and", "&"})


@dataclass(frozen=True)
class Pages:
    first_page: str
    last_page: Optional[str] = None


@dataclass(frozen=True)
class ParsedReference:
    raw: str
    first_author: Optional[str] = None
    second_author: Optional[str] = None
    year: Optional[int] = None
    journal: Optional[str] = None
    volume_issue: Optional[str] = None
    pages: Optional[Pages] = None

    @property
    def is_parseable(self) -> bool:
        return any(
            v is not None
            for v in (
                self.first_author,
                self.second_author,
                self.year,
                self.journal,
                self.volume_issue,
                self.pages,
            )
        )


def _core(token: str) -> str:
    """Token with non-alphanumeric edges removed."""
    lo, hi = 0, len(token)
    while lo < hi and not token[lo].isalnum():
        lo += 1
    while hi > lo and not token[hi - 1].isalnum():
        hi -= 1
    return token[lo:hi]


def _is_year_token(token: str) -> bool:
    return bool(_YEAR.fullmatch(_core(token)))


def _pages_match(token: str):
    core = _core(token)
    m = _VOL_PAGES.fullmatch(core)
    if m:
        return m.group(1), Pages(m.group(2), m.group(3))
    m = _PAGES.fullmatch(core)
    if m:
        return None, Pages(m.group(1), m.group(2))
    m = _VOL_FIRST.fullmatch(core)
    if m:
        return m.group(1), Pages(m.group(2))
    return None


def _is_surname(token: str) -> bool:
    return bool(_SURNAME.fullmatch(_core(token)))


def _is_initial(token: str) -> bool:
    return bool(_INITIAL.fullmatch(token))


def _find_authors(tokens: list[str]) -> tuple[Optional[str], Optional[str], int]:
    """Return (first_author, second_author, index just past the author block)."""
    i = 0
    while i < len(tokens) and not _core(tokens[i]):
        i += 1
    first_pos = i
    if i >= len(tokens) or not _is_surname(tokens[i]):
        return None, None, first_pos

    def follow_ok(j: int) -> bool:
        # A surname counts as an author only when what follows looks like a
        # name-list continuation rather than the start of a journal title.
        # A bare period after it reads as an abbreviation ("Nuc ." is not a
        # surname) and a volume:pages token marks a journal ("Nature 12:34"),
        # so both disqualify.
        if j >= len(tokens):
            return True
        nxt = tokens[j]
        if not _core(nxt):
            return nxt != "."
        if _pages_match(nxt) is not None:
            return False
        return (
            nxt.lower() in ("et", "and")
            or _is_initial(nxt)
            or _is_year_token(nxt)
        )

    surnames: list[str] = []
    saw_list_marker = False
    prev = None  # "surname" | "initial" | "sep"
    pending_and = False
    while i < len(tokens):
        tok = tokens[i]
        low = tok.lower()
        if low == "et" and i + 1 < len(tokens) and tokens[i + 1].lower().startswith("al"):
            saw_list_marker = True
            i += 2
            # swallow the detached period after a bare "al"
            if i < len(tokens) and tokens[i] == "." and tokens[i - 1].lower() == "al":
                i += 1
            break
        if tok in _SEPARATORS or low == "and":
            saw_list_marker = bool(surnames)
            pending_and = low in ("and", "&")
            prev = "sep"
            i += 1
            continue
        # initials directly after a surname ("Smith J . P . ,"); after a
        # separator a single capital is more likely a journal abbreviation
        if prev in ("surname", "initial") and _is_initial(tok):
            prev = "initial"
            i += 1
            continue
        if prev == "initial" and tok == ".":
            i += 1
            continue
        if _is_surname(tok) and (not surnames or follow_ok(i + 1)):
            surnames.append(_core(tok))
            prev = "surname"
            i += 1
            if pending_and:
                # "A and B" is a closed author list
                break
            continue
        break

    if not surnames:
        return None, None, first_pos
    if not saw_list_marker:
        if not follow_ok(first_pos + 1):
            return None, None, first_pos
        if i >= len(tokens):
            # a lone capitalized word is not evidence of an author
            return None, None, first_pos
    first = surnames[0]
    second = surnames[1] if len(surnames) > 1 else None
    return first, second, i


def _journal_between(tokens: list[str], start: int, stop: int) -> Optional[str]:
    """Longest comma-free token run in [start, stop), periods re-attached."""
    runs: list[list[str]] = [[]]
    for tok in tokens[start:stop]:
        if tok in (",", ";"):
            runs.append([])
        else:
            runs[-1].append(tok)

    def n_words(run):
        return sum(1 for t in run if _core(t))

    best = max(runs, key=n_words, default=[])
    if not any(any(ch.isalpha() for ch in t) for t in best):
        return None
    pieces: list[str] = []
    for tok in best:
        if tok == "." and pieces:
            pieces[-1] += "."
        elif _core(tok) or tok == "&":
            pieces.append(tok)
    text = " ".join(pieces).strip(",;: ")
    return text or None


def parse_reference(text: str) -> ParsedReference:
    tokens = text.split()
    if not tokens:
        return ParsedReference(raw=text)

    year = None
    year_idx = None
    for idx, tok in enumerate(tokens):
        if _is_year_token(tok):
            year = int(_core(tok))
            year_idx = idx

    volume = None
    pages = None
    pages_idx = None
    for idx, tok in enumerate(tokens):
        m = _pages_match(tok)
        if m is not None:
            volume, pages = m
            pages_idx = idx

    first_author, second_author, block_end = _find_authors(tokens)

    stop = len(tokens)
    for idx in (pages_idx, year_idx):
        if idx is not None and idx >= block_end:
            stop = min(stop, idx)
    journal = _journal_between(tokens, block_end, stop)

    return ParsedReference(
        raw=text,
        first_author=first_author,
        second_author=second_author,
        year=year,
        journal=journal,
        volume_issue=volume,
        pages=pages,
    )


def write_parsed(refs: Iterable[tuple[str, ParsedReference]], stream: IO[str]) -> None:
    """Write (patent_id, reference) rows; absent fields as '_'."""
    for patent_id, ref in refs:
        pages_first = ref.pages.first_page if ref.pages else None
        pages_last = ref.pages.last_page if ref.pages else None
        cols = [
            patent_id,
            ref.first_author,
            ref.second_author,
            str(ref.year) if ref.year is not None else None,
            ref.journal,
            ref.volume_issue,
            pages_first,
            pages_last,
            ref.raw,
        ]
        stream.write("\t".join(c if c is not None else _ABSENT for c in cols) + "\n")


def read_parsed(stream: IO[str], path=None) -> list[tuple[str, ParsedReference]]:
    out = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 9:
            raise FormatError(f"expected 9 columns, got {len(cols)}", line=lineno, path=path)
        patent_id, first, second, year, journal, volume, p_first, p_last, raw = [
            None if c == _ABSENT else c for c in cols
        ]
        pages = Pages(p_first, p_last) if p_first is not None else None
        try:
            out.append(
                (
                    patent_id or "",
                    ParsedReference(
                        raw=raw or "",
                        first_author=first,
                        second_author=second,
                        year=int(year) if year is not None else None,
                        journal=journal,
                        volume_issue=volume,
                        pages=pages,
                    ),
                )
            )
        except ValueError as exc:
            raise FormatError(f"bad parsed-reference record: {exc}", line=lineno, path=path)
    return out
