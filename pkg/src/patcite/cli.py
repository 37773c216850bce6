"""Command-line entry point wiring the pipeline stages together.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

from . import chunker, corpus, evaluation, extract, matcher, refparse
from .crf import TrainConfig, load_model, save_model, train
from .crf.model import decode_document
from .crf.pipeline import CrfTrainer
from .errors import DataError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _read_docs(path: str):
    with open(path, encoding="utf-8") as fh:
        return corpus.read_iob(fh, path=path)


def _load_config(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad config file {path}: {exc}")
    if not isinstance(cfg, dict):
        raise DataError(f"config file {path} must hold a JSON object")
    return cfg


def _setting(args, cfg, name, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get(name, default)


def _abbreviations(args, cfg):
    if getattr(args, "abbreviations", None):
        return frozenset(args.abbreviations)
    if "abbreviations" in cfg:
        return frozenset(cfg["abbreviations"])
    return corpus.DEFAULT_ABBREVIATIONS


def cmd_tokenize(args):
    cfg = _load_config(args.config)
    abbreviations = _abbreviations(args, cfg)
    docs = []
    for path in args.texts:
        text = Path(path).read_text(encoding="utf-8")
        tokens = corpus.tokenize(text, abbreviations)
        docs.append(corpus.LabeledDocument(Path(path).stem, tuple(tokens)))
    with _open_out(args.output) as out:
        corpus.write_iob(docs, out)
    return EXIT_OK


def cmd_ingest_brat(args):
    cfg = _load_config(args.config)
    abbreviations = _abbreviations(args, cfg)
    docs = []
    for path in args.texts:
        text_path = Path(path)
        ann_path = text_path.with_suffix(".ann")
        if not ann_path.exists():
            raise DataError(f"no annotation file for {path} (expected {ann_path})")
        text = text_path.read_text(encoding="utf-8")
        tokens = corpus.tokenize(text, abbreviations)
        with open(ann_path, encoding="utf-8") as fh:
            spans = corpus.read_brat_spans(fh, text, path=str(ann_path))
        docs.append(corpus.align_annotations(text, tokens, spans, text_path.stem))
    with _open_out(args.output) as out:
        corpus.write_iob(docs, out)
    return EXIT_OK


def cmd_stats(args):
    docs = _read_docs(args.iob)
    stats = corpus.corpus_stats(docs)
    mean = (
        f"{stats.mean_reference_length:.4f}"
        if stats.mean_reference_length is not None
        else "_"
    )
    with _open_out(args.output) as out:
        out.write(f"n_documents\t{stats.n_documents}\n")
        out.write(f"n_references\t{stats.n_references}\n")
        out.write(f"n_b_tokens\t{stats.n_b_tokens}\n")
        out.write(f"n_i_tokens\t{stats.n_i_tokens}\n")
        out.write(f"n_reference_tokens\t{stats.n_reference_tokens}\n")
        out.write(f"mean_reference_length\t{mean}\n")
    return EXIT_OK


def cmd_chunk(args):
    cfg = _load_config(args.config)
    max_len = int(_setting(args, cfg, "max_len", 64))
    docs = _read_docs(args.iob)
    with open(args.vocab, encoding="utf-8") as fh:
        vocab = chunker.SubwordVocab.from_file(fh)
    with _open_out(args.output) as out:
        for doc in docs:
            chunker.write_chunks(chunker.chunk_document(doc, vocab, max_len), out)
    return EXIT_OK


def _train_config(args, cfg):
    return TrainConfig(
        l2_sigma=float(_setting(args, cfg, "sigma", 1.0)),
        max_iterations=int(_setting(args, cfg, "max_iterations", 200)),
        tolerance=float(_setting(args, cfg, "tolerance", 1e-5)),
    )


def cmd_train_crf(args):
    cfg = _load_config(args.config)
    docs = _read_docs(args.iob)
    model = train(docs, _train_config(args, cfg))
    save_model(model, args.model)
    return EXIT_OK


def cmd_label(args):
    docs = _read_docs(args.iob)
    model = load_model(args.model)
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            predictions = list(pool.map(_decode_with, [(model, d) for d in docs]))
    else:
        predictions = [decode_document(model, d) for d in docs]
    labelled = [doc.with_pred(pred) for doc, pred in zip(docs, predictions)]
    with _open_out(args.output) as out:
        corpus.write_iob(labelled, out)
    return EXIT_OK


def _decode_with(pair):
    model, doc = pair
    return decode_document(model, doc)


def cmd_extract(args):
    docs = _read_docs(args.iob)
    with _open_out(args.output) as out:
        for doc in docs:
            extract.write_spans(extract.spans_from_document(doc, args.column), out)
    return EXIT_OK


def cmd_parse(args):
    with open(args.spans, encoding="utf-8") as fh:
        spans = extract.read_spans(fh, path=args.spans)
    rows = [(span.doc_id, refparse.parse_reference(span.text)) for span in spans]
    with _open_out(args.output) as out:
        refparse.write_parsed(rows, out)
    return EXIT_OK


def _parse_focus_years(value: str):
    try:
        lo, hi = value.replace("-", ":").split(":")
        return int(lo), int(hi)
    except ValueError:
        raise DataError(f"bad focus-years range {value!r}, expected LO:HI")


def cmd_match(args):
    cfg = _load_config(args.config)
    focus = _setting(args, cfg, "focus_years", None)
    if isinstance(focus, str):
        focus_years = _parse_focus_years(focus)
    elif isinstance(focus, (list, tuple)):
        focus_years = (int(focus[0]), int(focus[1]))
    else:
        focus_years = matcher.DEFAULT_FOCUS_YEARS
    with open(args.spans, encoding="utf-8") as fh:
        spans = extract.read_spans(fh, path=args.spans)
    with open(args.store, encoding="utf-8") as fh:
        store = matcher.load_publications(fh, path=args.store)
    front_page = None
    if args.front_page:
        with open(args.front_page, encoding="utf-8") as fh:
            front_page = matcher.read_front_page(fh, path=args.front_page)
    by_patent: dict[str, list] = {}
    for span in spans:
        by_patent.setdefault(span.doc_id, []).append(span)
    report = matcher.run_matching(by_patent, store, front_page, focus_years)
    with _open_out(args.output) as out:
        out.write(matcher.format_counts(report.counts))
    if args.matches_out:
        with open(args.matches_out, "w", encoding="utf-8") as fh:
            for patent_id in sorted(report.matches_by_patent):
                for record_id in sorted(report.matches_by_patent[patent_id]):
                    fh.write(f"{patent_id}\t{record_id}\n")
    return EXIT_OK


def cmd_evaluate_loo(args):
    cfg = _load_config(args.config)
    docs = _read_docs(args.iob)
    trainer = CrfTrainer(_train_config(args, cfg))
    report, predictions = evaluation.loo_harness(docs, trainer, jobs=args.jobs)
    with _open_out(args.output) as out:
        out.write(evaluation.format_eval_report(report))
    if args.pred_out:
        labelled = [doc.with_pred(predictions[doc.doc_id]) for doc in docs]
        with open(args.pred_out, "w", encoding="utf-8") as fh:
            corpus.write_iob(labelled, fh)
    return EXIT_OK


def cmd_error_analysis(args):
    docs = _read_docs(args.iob)
    histograms = []
    runs = []
    for doc in docs:
        if doc.gold_labels is None or doc.pred_labels is None:
            raise DataError(f"document {doc.doc_id!r} needs both gold and pred labels")
        histograms.append(
            evaluation.relative_error_positions(
                doc.gold_labels, doc.pred_labels, args.bin_width
            )
        )
        runs.append(evaluation.o_run_lengths(doc.gold_labels, doc.pred_labels))
    histogram = evaluation.ErrorPositionHistogram.combine(histograms)
    distribution = evaluation.ORunDistribution.combine(runs)
    with _open_out(args.output) as out:
        out.write(evaluation.format_histogram(histogram))
        out.write("\n")
        out.write(evaluation.format_run_lengths(distribution))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="patcite", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="JSON config file; explicit flags win")
        p.add_argument("-o", "--output", default="-", help="output path, '-' = stdout")
        return p

    p = add("tokenize", cmd_tokenize, "raw text files to an IOB skeleton")
    p.add_argument("texts", nargs="+")
    p.add_argument("--abbreviations", nargs="*", help="tokens that keep a trailing period")

    p = add("ingest-brat", cmd_ingest_brat, "text + BRAT .ann files to gold IOB")
    p.add_argument("texts", nargs="+", help="text files; .ann siblings are read")
    p.add_argument("--abbreviations", nargs="*")

    p = add("stats", cmd_stats, "corpus statistics from gold labels")
    p.add_argument("iob")

    p = add("chunk", cmd_chunk, "IOB to subword chunk dump")
    p.add_argument("iob")
    p.add_argument("--vocab", required=True)
    p.add_argument("--max-len", dest="max_len", type=int)

    p = add("train-crf", cmd_train_crf, "train the CRF labeller")
    p.add_argument("iob")
    p.add_argument("--model", required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--tolerance", type=float)

    p = add("label", cmd_label, "fill the predicted column with CRF output")
    p.add_argument("iob")
    p.add_argument("--model", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = add("extract", cmd_extract, "predicted labels to reference spans")
    p.add_argument("iob")
    p.add_argument("--column", choices=("pred", "gold"), default="pred")

    p = add("parse", cmd_parse, "reference spans to bibliographic fields")
    p.add_argument("spans")

    p = add("match", cmd_match, "match spans against the publication store")
    p.add_argument("spans")
    p.add_argument("--store", required=True)
    p.add_argument("--front-page", dest="front_page")
    p.add_argument("--focus-years", dest="focus_years", help="e.g. 1980:2010")
    p.add_argument("--matches-out", dest="matches_out")

    p = add("evaluate-loo", cmd_evaluate_loo, "leave-one-out CRF evaluation")
    p.add_argument("iob")
    p.add_argument("--sigma", type=float)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--pred-out", dest="pred_out")

    p = add("error-analysis", cmd_error_analysis, "error position and O-run reports")
    p.add_argument("iob")
    p.add_argument("--bin-width", dest="bin_width", type=float, default=0.1)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.fn(args)
    except (DataError, FileNotFoundError) as exc:
        print(f"patcite: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BrokenPipeError:
        return EXIT_OK
    except Exception as exc:  # pragma: no cover - defensive
        print(f"patcite: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
