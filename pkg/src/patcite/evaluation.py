"""Leave-one-out evaluation, micro-averaged token metrics, and error profiles.

The two error analyses look only at tokens inside gold reference spans that
the model labelled O: where in the span they fall (relative position) and how
long the consecutive O stretches are.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .corpus import IobLabel, LabeledDocument
from .errors import DataError


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    b: LabelMetrics
    i: LabelMetrics
    #: metric names that hit the 0/0 convention and were reported as 0
    zero_division: tuple[str, ...] = ()

    def metrics(self, label: IobLabel) -> LabelMetrics:
        if label == IobLabel.B:
            return self.b
        if label == IobLabel.I:
            return self.i
        raise KeyError(label)


class FoldError(DataError):
    def __init__(self, doc_id, cause):
        super().__init__(f"fold {doc_id!r} failed: {cause}")
        self.doc_id = doc_id


def _div(numer: int, denom: int, name: str, flags: list[str]) -> float:
    if denom == 0:
        flags.append(name)
        return 0.0
    return numer / denom


def token_metrics(
    gold_seqs: Sequence[Sequence[IobLabel]],
    pred_seqs: Sequence[Sequence[IobLabel]],
) -> EvalReport:
    """Micro-averaged per-label precision/recall/F1 pooled over all tokens."""
    if len(gold_seqs) != len(pred_seqs):
        raise DataError("gold and predicted document sets differ in size")
    tp = {IobLabel.B: 0, IobLabel.I: 0}
    fp = {IobLabel.B: 0, IobLabel.I: 0}
    fn = {IobLabel.B: 0, IobLabel.I: 0}
    for gold, pred in zip(gold_seqs, pred_seqs):
        if len(gold) != len(pred):
            raise DataError(
                f"label sequences differ in length: {len(gold)} vs {len(pred)}"
            )
        for g, p in zip(gold, pred):
            for label in (IobLabel.B, IobLabel.I):
                if g == label and p == label:
                    tp[label] += 1
                elif g == label:
                    fn[label] += 1
                elif p == label:
                    fp[label] += 1
    flags: list[str] = []
    per_label = {}
    for label in (IobLabel.B, IobLabel.I):
        precision = _div(tp[label], tp[label] + fp[label], f"{label.value}.precision", flags)
        recall = _div(tp[label], tp[label] + fn[label], f"{label.value}.recall", flags)
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            flags.append(f"{label.value}.f1")
            f1 = 0.0
        per_label[label] = LabelMetrics(precision, recall, f1, tp[label] + fn[label])
    return EvalReport(per_label[IobLabel.B], per_label[IobLabel.I], tuple(flags))


Trainer = Callable[[Sequence[LabeledDocument]], Callable[[LabeledDocument], list[IobLabel]]]


def loo_harness(
    docs: Sequence[LabeledDocument],
    trainer: Trainer,
    jobs: int = 1,
) -> tuple[EvalReport, dict[str, list[IobLabel]]]:
    """Hold out each document in turn, train on the rest, predict the held-out one.

    Returns pooled micro metrics and the per-document predictions.
    """
    if len(docs) < 2:
        raise DataError("leave-one-out needs at least two documents")
    for doc in docs:
        if doc.gold_labels is None:
            raise DataError(f"document {doc.doc_id!r} has no gold labels")

    folds = [
        (docs[k], tuple(docs[:k]) + tuple(docs[k + 1 :])) for k in range(len(docs))
    ]
    predictions: dict[str, list[IobLabel]] = {}
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                (held_out.doc_id, pool.submit(_run_fold, trainer, held_out, rest))
                for held_out, rest in folds
            ]
            for doc_id, future in futures:
                try:
                    predictions[doc_id] = future.result()
                except Exception as exc:
                    raise FoldError(doc_id, exc) from exc
    else:
        for held_out, rest in folds:
            try:
                predictions[held_out.doc_id] = _run_fold(trainer, held_out, rest)
            except Exception as exc:
                raise FoldError(held_out.doc_id, exc) from exc

    report = token_metrics(
        [doc.gold_labels for doc in docs],
        [predictions[doc.doc_id] for doc in docs],
    )
    return report, predictions


def _run_fold(trainer, held_out, rest):
    predict = trainer(rest)
    labels = list(predict(held_out))
    if len(labels) != len(held_out.tokens):
        raise DataError(
            f"trainer produced {len(labels)} labels for {len(held_out.tokens)} tokens"
        )
    return labels


@dataclass(frozen=True)
class ErrorPositionHistogram:
    positions: tuple[float, ...]
    bin_width: float = 0.1

    @property
    def bin_counts(self) -> tuple[int, ...]:
        n_bins = max(1, round(1.0 / self.bin_width))
        counts = [0] * n_bins
        for p in self.positions:
            counts[min(int(p / self.bin_width), n_bins - 1)] += 1
        return tuple(counts)

    @classmethod
    def combine(cls, histograms: Iterable["ErrorPositionHistogram"]) -> "ErrorPositionHistogram":
        histograms = list(histograms)
        width = histograms[0].bin_width if histograms else 0.1
        merged: tuple[float, ...] = ()
        for h in histograms:
            merged += h.positions
        return cls(merged, width)


@dataclass(frozen=True)
class ORunDistribution:
    run_lengths: tuple[int, ...]

    @property
    def median(self) -> Optional[float]:
        return statistics.median(self.run_lengths) if self.run_lengths else None

    @property
    def quartiles(self) -> Optional[tuple[float, float]]:
        if len(self.run_lengths) < 2:
            return None
        q = statistics.quantiles(self.run_lengths, n=4, method="inclusive")
        return q[0], q[2]

    @classmethod
    def combine(cls, dists: Iterable["ORunDistribution"]) -> "ORunDistribution":
        merged: tuple[int, ...] = ()
        for d in dists:
            merged += d.run_lengths
        return cls(merged)


def _gold_spans(gold: Sequence[IobLabel]):
    spans = []
    start = None
    for i, label in enumerate(gold):
        if label == IobLabel.B:
            if start is not None:
                spans.append((start, i - 1))
            start = i
        elif label == IobLabel.I:
            if start is None:
                start = i
        else:
            if start is not None:
                spans.append((start, i - 1))
                start = None
    if start is not None:
        spans.append((start, len(gold) - 1))
    return spans


def relative_error_positions(
    gold: Sequence[IobLabel],
    pred: Sequence[IobLabel],
    bin_width: float = 0.1,
) -> ErrorPositionHistogram:
    """Where inside gold spans the O mispredictions fall, scaled to [0, 1]."""
    if len(gold) != len(pred):
        raise DataError("gold and predicted sequences differ in length")
    positions: list[float] = []
    for start, end in _gold_spans(gold):
        length = end - start + 1
        for i in range(length):
            if pred[start + i] == IobLabel.O:
                positions.append(i / (length - 1) if length > 1 else 0.0)
    return ErrorPositionHistogram(tuple(positions), bin_width)


def o_run_lengths(
    gold: Sequence[IobLabel],
    pred: Sequence[IobLabel],
) -> ORunDistribution:
    """Lengths of maximal predicted-O runs inside gold spans."""
    if len(gold) != len(pred):
        raise DataError("gold and predicted sequences differ in length")
    runs: list[int] = []
    for start, end in _gold_spans(gold):
        current = 0
        for i in range(start, end + 1):
            if pred[i] == IobLabel.O:
                current += 1
            elif current:
                runs.append(current)
                current = 0
        if current:
            runs.append(current)
    return ORunDistribution(tuple(runs))


def format_eval_report(report: EvalReport) -> str:
    lines = ["label\tprecision\trecall\tf1\tsupport"]
    for label in (IobLabel.B, IobLabel.I):
        m = report.metrics(label)
        lines.append(
            f"{label.value}\t{m.precision:.4f}\t{m.recall:.4f}\t{m.f1:.4f}\t{m.support}"
        )
    if report.zero_division:
        lines.append("# zero-division reported as 0: " + ", ".join(report.zero_division))
    return "\n".join(lines) + "\n"


def format_histogram(histogram: ErrorPositionHistogram) -> str:
    lines = ["bin_start\tcount"]
    for k, count in enumerate(histogram.bin_counts):
        lines.append(f"{k * histogram.bin_width:.2f}\t{count}")
    return "\n".join(lines) + "\n"


def format_run_lengths(dist: ORunDistribution) -> str:
    lines = ["run_length\tcount"]
    counts: dict[int, int] = {}
    for length in dist.run_lengths:
        counts[length] = counts.get(length, 0) + 1
    for length in sorted(counts):
        lines.append(f"{length}\t{counts[length]}")
    median = dist.median
    lines.append(f"# n={len(dist.run_lengths)}")
    lines.append(f"# median={median if median is not None else 'NA'}")
    quartiles = dist.quartiles
    if quartiles is not None:
        lines.append(f"# q1={quartiles[0]} q3={quartiles[1]}")
    return "\n".join(lines) + "\n"
