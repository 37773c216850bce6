"""Deterministic synthetic fixtures: patent-like text with planted references.

Everything is generated from seeded RNGs so tests can freeze exact expected
values. Documents are produced as raw text plus character spans and pushed
through the real tokenizer and aligner, the same path real data takes.
"""

from __future__ import annotations

import random
import string

from patcite.chunker import SubwordVocab
from patcite.corpus import AnnotationSpan, LabeledDocument, align_annotations, tokenize
from patcite.matcher import PublicationRecord, PublicationStore

SURNAMES = [
    "Smith", "Johnson", "Kakuta", "Eskildsen", "Tanaka", "Verhoef", "Muller",
    "Okada", "Fernandez", "Kowalski", "Nguyen", "Hansen", "Ricci", "Dubois",
    "Novak", "Petrov", "Lindqvist", "Marchetti", "Keller", "Andersen",
    "Vasquez", "Bergman", "Castillo", "Duarte", "Egeland", "Fontaine",
    "Gruber", "Hoffman", "Ibrahim", "Jansen", "Klein", "Larsen", "Moreau",
    "Nielsen", "Olsen", "Pavlov", "Quist", "Rasmussen", "Schmidt", "Thomsen",
]

JOURNALS = [
    ("Nucleic Acids Research", "Nuc. Acids Res."),
    ("Journal of Biological Chemistry", "J. Biol. Chem."),
    ("Journal of Interferon & Cytokine Research", "J. Interferon & Cytokine Res."),
    ("Proceedings of the National Academy of Sciences", "Proc. Natl. Acad. Sci."),
    ("Annual Review of Biochemistry", "Annu. Rev. Biochem."),
    ("Molecular and Cellular Biology", "Mol. Cell. Biol."),
    ("Journal of Immunology", "J. Immunol."),
    ("Gene Therapy", "Gene Ther."),
    ("Applied Microbiology", "Appl. Microbiol."),
    ("Biochimica et Biophysica Acta", "Biochim. Biophys. Acta"),
    ("Journal of Virology", "J. Virol."),
    ("Protein Engineering", "Protein Eng."),
    # single-word titles collide with ordinary prose and surnames
    ("Science", "Science"),
    ("Nature", "Nature"),
    ("Cell", "Cell"),
    ("Gene", "Gene"),
]

FILLER = (
    "the method of invention provides a composition comprising nucleic acid "
    "sequence encoding protein expression vector host cell wherein said "
    "polypeptide fragment thereof may be used for treatment of disease in a "
    "subject according to certain embodiments described herein further "
    "aspects include isolated purified recombinant molecules binding assay "
    "culture medium sample obtained from tissue antibody against target "
    "gene cell science nature results according"
).split()

CAP_FILLER = ["DNA", "RNA", "PCR", "Table", "Figure", "Example", "Invention", "SEQ"]

MONTHS = ["Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Sep", "Oct", "Nov", "Dec"]


_SYLLABLES = "ka ro ven li sha tor mi az ul be dra on es wi ck".split()


def _novel_surname(rng: random.Random) -> str:
    name = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4)))
    return name.capitalize()


def _distractor(rng: random.Random, surname: str | None = None) -> str:
    """Citation-shaped strings that are not scientific references."""
    surname = surname or rng.choice(SURNAMES)
    kind = rng.randrange(7)
    if kind == 0:
        return f"U.S. Pat. No. {rng.randint(4, 6)},{rng.randint(100, 999)},{rng.randint(100, 999)}"
    if kind == 1:
        return f"application Ser. No. {rng.randint(10, 99)}/{rng.randint(100, 999)},{rng.randint(100, 999)}"
    if kind == 2:
        return (
            f"filed {rng.choice(MONTHS)}. {rng.randint(1, 28)}, "
            f"{rng.randint(1980, 2010)}"
        )
    if kind == 3:
        return f"GenBank Accession No. {rng.choice('UMXZ')}{rng.randint(10000, 99999)}"
    if kind == 4:
        return f"(SEQ ID NO: {rng.randint(1, 40)})"
    if kind == 5:
        return f"disclosed by {surname} in {rng.randint(1980, 2010)}"
    return f"the {surname} procedure"


def make_store(n_records: int = 200, seed: int = 11) -> PublicationStore:
    rng = random.Random(seed)
    records = []
    for k in range(n_records):
        n_authors = rng.randint(1, 4)
        authors = tuple(rng.sample(SURNAMES, n_authors))
        full, abbrev = rng.choice(JOURNALS)
        records.append(
            PublicationRecord(
                record_id=f"P{k:04d}",
                first_author_surname=authors[0],
                author_surnames=authors,
                year=rng.randint(1975, 2012),
                journal_names=frozenset({full, abbrev}),
                volume=str(rng.randint(1, 250)),
                issue=str(rng.randint(1, 12)) if rng.random() < 0.4 else None,
                first_page=str(rng.randint(1, 3000)),
            )
        )
    return PublicationStore(records)


def reference_text(rng: random.Random, record: PublicationRecord) -> str:
    """Render a record the way patents cite it in running text."""
    journal = rng.choice(sorted(record.journal_names))
    authors = record.author_surnames
    if len(authors) >= 3 or (len(authors) == 2 and rng.random() < 0.3):
        author_part = f"{authors[0]} et al."
    elif len(authors) == 2:
        author_part = f"{authors[0]} and {authors[1]}"
    else:
        author_part = authors[0]
    last_page = str(int(record.first_page) + rng.randint(1, 20))
    vol_pages = f"{record.volume}:{record.first_page}-{last_page}"
    style = rng.randrange(4)
    if style == 0:
        return f"{author_part}, {journal} {vol_pages}, {record.year}."
    if style == 1:
        return f"{author_part}, {journal}, {vol_pages} ({record.year})"
    if style == 2:
        # short form: author and year only, never matchable
        return f"{author_part}, {record.year}"
    return f"{author_part}, {journal} {vol_pages} {record.year}"


def _filler(rng: random.Random, n_words: int) -> str:
    words = []
    for _ in range(n_words):
        r = rng.random()
        if r < 0.03:
            words.append(str(rng.randint(1, 2099)))
        elif r < 0.05:
            words.append(f"{rng.randint(1, 99)}-{rng.randint(1, 99)}")
        elif r < 0.10:
            words.append(rng.choice(CAP_FILLER))
        elif r < 0.13:
            words.append(_distractor(rng))
        elif r < 0.19:
            words.append(rng.choice(FILLER) + rng.choice([",", ".", ";"]))
        else:
            words.append(rng.choice(FILLER))
    return " ".join(words)


def make_patent(
    doc_id: str,
    store: PublicationStore,
    rng: random.Random,
    n_refs: int = 12,
) -> tuple[str, list[AnnotationSpan], list[str]]:
    """Return (text, reference spans, cited record ids).

    Besides store-backed references, a share of references use surnames never
    seen in other documents, and yet more appear as bare author-year mentions,
    so held-out documents cannot be labelled by token memorization alone.
    """
    records = sorted(store, key=lambda r: r.record_id)
    parts: list[str] = []
    spans: list[AnnotationSpan] = []
    cited: list[str] = []
    offset = 0

    def emit(piece: str):
        nonlocal offset
        parts.append(piece)
        offset += len(piece)

    emit(_filler(rng, rng.randint(10, 30)) + " ")
    for _ in range(n_refs):
        form = rng.random()
        labelled = True
        if form < 0.25:
            # author-year mention with an unseen surname; labelled as a
            # reference only part of the time, mirroring the annotation
            # ambiguity such mentions have in real patents
            name = _novel_surname(rng)
            suffix = " et al." if rng.random() < 0.5 else ""
            ref = f"{name}{suffix}, {rng.randint(1980, 2010)}"
            labelled = rng.random() < 0.6
        else:
            record = rng.choice(records)
            cited.append(record.record_id)
            ref = reference_text(rng, record)
        wrap = rng.randrange(3)
        if wrap == 0:
            emit("(")
        elif wrap == 1:
            emit("(see ")
        if labelled:
            spans.append(AnnotationSpan(offset, offset + len(ref)))
        emit(ref)
        if wrap in (0, 1):
            emit(")")
        emit(" " + _filler(rng, rng.randint(15, 40)) + " ")
        if rng.random() < 0.3:
            emit(_distractor(rng, _novel_surname(rng)) + " ")
    emit(_filler(rng, rng.randint(5, 15)))
    return "".join(parts), spans, cited


def make_corpus(
    n_docs: int = 22,
    n_refs: int = 12,
    seed: int = 7,
    store: PublicationStore | None = None,
) -> tuple[list[LabeledDocument], PublicationStore, dict]:
    """A labelled corpus, the store its references point into, and bookkeeping.

    The info dict carries the generator's own ground truth: store records
    cited per document and the number of spans actually planted (the oracle
    for reference counts, independent of labelling code).
    """
    if store is None:
        store = make_store()
    rng = random.Random(seed)
    docs = []
    cited_by_doc = {}
    n_planted = 0
    for d in range(n_docs):
        doc_id = f"US{7000000 + d * 1111}B2"
        text, spans, cited = make_patent(doc_id, store, rng, n_refs)
        tokens = tokenize(text)
        docs.append(align_annotations(text, tokens, spans, doc_id))
        cited_by_doc[doc_id] = cited
        n_planted += len(spans)
    info = {"cited_by_doc": cited_by_doc, "n_planted_spans": n_planted}
    return docs, store, info


def toy_vocab(extra: tuple[str, ...] = ()) -> SubwordVocab:
    """Character-fallback vocabulary: every printable ASCII word tokenizes."""
    entries: dict[str, int] = {}
    for token in ("[PAD]", "[UNK]", "[CLS]", "[SEP]"):
        entries[token] = len(entries)
    for ch in string.ascii_letters + string.digits + string.punctuation:
        entries[ch] = len(entries)
        entries["##" + ch] = len(entries)
    for piece in extra:
        if piece not in entries:
            entries[piece] = len(entries)
    return SubwordVocab(entries=entries)


E2E_STORE_ROWS = [
    # record_id, first author, authors, year, journals, volume, issue, first page
    ("R001", "Smith", "Smith;Jones", "1999", "J. Biol. Chem.;Journal of Biological Chemistry", "12", "_", "345"),
    ("R002", "Kakuta", "Kakuta;Saito;Ito", "2002", "J. Interferon & Cytokine Res.", "22", "_", "981"),
    ("R003", "Eskildsen", "Eskildsen;Justesen", "2003", "Nuc. Acids Res.;Nucleic Acids Research", "31", "_", "3166"),
    ("R004", "Hansen", "Hansen", "1985", "Appl. Microbiol.", "5", "_", "12"),
    ("R005", "Hansen", "Hansen;Olsen", "1985", "Appl. Microbiol.", "5", "_", "12"),
    ("R006", "Novak", "Novak;Petrov", "1975", "Gene Ther.", "2", "_", "55"),
    ("R007", "Ricci", "Ricci;Dubois", "2005", "Mol. Cell. Biol.", "25", "_", "100"),
    ("R008", "Tanaka", "Tanaka", "1995", "J. Virol.", "69", "_", "2004"),
    ("R009", "Moreau", "Moreau;Keller", "2001", "Protein Eng.", "14", "_", "879"),
    ("R010", "Lindqvist", "Lindqvist;Bergman", "1990", "Biochim. Biophys. Acta", "1032", "_", "89"),
]

_E2E_PATENTS = {
    # per patent: list of (before-text, reference string, after-text)
    "US1000001A": [
        ("The expression vector described in ", "Eskildsen et al., Nuc. Acids Res. 31:3166-3173, 2003.", " was modified."),
        ("Cytokine activity was assayed as in (", "Kakuta et al., J. Interferon & Cytokine Res. 22:981-993, 2002.", ") and stored."),
        ("Host cells were cultured following (see ", "Ricci and Dubois, Mol. Cell. Biol. 25:100-110, 2005.", ") at standard conditions."),
        ("The same construct appears in ", "Eskildsen et al., Nuc. Acids Res. 31:3166-3173, 2003.", " as discussed above."),
    ],
    "US1000002A": [
        ("An early protocol (", "Novak and Petrov, Gene Ther. 2:55-60, 1975.", ") predates the focus period."),
        ("Fermentation conditions follow ", "Hansen, Appl. Microbiol. 5:12-20, 1985.", " with minor changes."),
        ("Stability was improved per ", "Moreau and Keller, Protein Eng. 14:879-884, 2001.", " in all samples."),
    ],
    "US1000003A": [
        ("Viral titers were measured as in ", "Tanaka, J. Virol. 69:2004-2010, 1995.", " throughout."),
        ("Membrane preparation followed (", "Lindqvist and Bergman, Biochim. Biophys. Acta 1032:89-95, 1990.", ") exactly."),
        ("A related method (", "Quist, 1992", ") lacks full publication details."),
    ],
}

E2E_FRONT_PAGE = [("US1000001A", "R007")]

# extracted 10 references; the R007 match is on the front page (-1);
# the 1975 reference is outside the focus years (-1); every remaining
# reference parses with author+year; definite per patent after
# de-duplication: US1 {R002, R003}, US2 {R009} (Hansen is ambiguous
# R004/R005), US3 {R008, R010}, and "Quist, 1992" has no matchable fields.
E2E_EXPECTED_COUNTS = dict(
    extracted=10, in_text_only=9, in_focus_years=8, parsed=8, definite_matches=5
)
E2E_EXPECTED_MATCHES = {
    "US1000001A": {"R002", "R003"},
    "US1000002A": {"R009"},
    "US1000003A": {"R008", "R010"},
}


def e2e_fixture():
    """Texts, BRAT annotation lines, store rows and expected pipeline outcome."""
    texts = {}
    annotations = {}
    for doc_id, pieces in _E2E_PATENTS.items():
        parts = []
        spans = []
        offset = 0
        for before, reference, after in pieces:
            parts.append(before)
            offset += len(before)
            spans.append((offset, offset + len(reference), reference))
            parts.append(reference)
            offset += len(reference)
            parts.append(after)
            offset += len(after)
            parts.append(" ")
            offset += 1
        texts[doc_id] = "".join(parts)
        annotations[doc_id] = "".join(
            f"T{k + 1}\tReference {start} {end}\t{surface}\n"
            for k, (start, end, surface) in enumerate(spans)
        )
    store_lines = "".join("\t".join(row) + "\n" for row in E2E_STORE_ROWS)
    front_page_lines = "".join(f"{p}\t{r}\n" for p, r in E2E_FRONT_PAGE)
    return texts, annotations, store_lines, front_page_lines


def random_document(rng: random.Random, doc_id: str = "doc", max_words: int = 60) -> LabeledDocument:
    """Random short document with a random well-formed gold labelling."""
    from patcite.corpus import IobLabel, Token

    n = rng.randint(1, max_words)
    words = []
    for _ in range(n):
        length = rng.randint(1, 12)
        words.append("".join(rng.choice(string.ascii_lowercase) for _ in range(length)))
    tokens = []
    offset = 0
    for w in words:
        tokens.append(Token(w, offset, offset + len(w)))
        offset += len(w) + 1
    labels = []
    prev = IobLabel.O
    for _ in range(n):
        if prev == IobLabel.O:
            label = rng.choice((IobLabel.O, IobLabel.O, IobLabel.B))
        else:
            label = rng.choice((IobLabel.O, IobLabel.B, IobLabel.I, IobLabel.I))
        labels.append(label)
        prev = label
    return LabeledDocument(doc_id, tuple(tokens), tuple(labels))
