"""Linear-chain CRF model: scoring, inference, decoding, serialization.

The chain score of a labelling y for feature sequence x is

    score(y | x) = sum_t sum_{f in x_t} W[f, y_t]  +  sum_{t>0} T[y_{t-1}, y_t]

with state weights W over interned feature ids and a 3x3 transition matrix T.
All inference runs in log space.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import LABELS, IobLabel
from ..errors import DataError
from .features import FeatureSequence

FORMAT_VERSION = 1
N_LABELS = len(LABELS)


@dataclass
class IndexedSequence:
    """Feature ids flattened over positions, CSR style."""

    feat_ids: np.ndarray  # int32, all known feature ids in position order
    offsets: np.ndarray  # int64, position p owns feat_ids[offsets[p]:offsets[p+1]]

    @property
    def n_positions(self) -> int:
        return len(self.offsets) - 1


@dataclass
class CrfModel:
    feature_index: dict[str, int]
    state_weights: np.ndarray  # (n_features, 3)
    transition_weights: np.ndarray  # (3, 3)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.state_weights.shape != (len(self.feature_index), N_LABELS):
            raise ValueError("state weight shape does not match the feature table")
        if self.transition_weights.shape != (N_LABELS, N_LABELS):
            raise ValueError("transition weights must be 3x3")
        if not (np.all(np.isfinite(self.state_weights)) and np.all(np.isfinite(self.transition_weights))):
            raise ValueError("model weights must be finite")

    def index(self, features: FeatureSequence) -> IndexedSequence:
        """Intern feature strings; unknown ones are dropped (weight zero)."""
        ids: list[int] = []
        offsets = [0]
        table = self.feature_index
        for position in features:
            ids.extend(table[f] for f in position if f in table)
            offsets.append(len(ids))
        return IndexedSequence(
            np.asarray(ids, dtype=np.int32), np.asarray(offsets, dtype=np.int64)
        )

    def state_scores(self, indexed: IndexedSequence) -> np.ndarray:
        n = indexed.n_positions
        scores = np.empty((n, N_LABELS))
        if len(indexed.feat_ids):
            positions = np.repeat(np.arange(n), np.diff(indexed.offsets))
            gathered = self.state_weights[indexed.feat_ids]
            for y in range(N_LABELS):
                scores[:, y] = np.bincount(positions, weights=gathered[:, y], minlength=n)
        else:
            scores[:] = 0.0
        return scores

    def sequence_score(self, indexed: IndexedSequence, labels: Sequence[IobLabel]) -> float:
        y = np.asarray([LABELS.index(l) for l in labels])
        scores = self.state_scores(indexed)
        total = float(scores[np.arange(len(y)), y].sum())
        if len(y) > 1:
            total += float(self.transition_weights[y[:-1], y[1:]].sum())
        return total


def _forward_backward_numpy(state_scores: np.ndarray, transitions: np.ndarray):
    alphas = np.empty_like(state_scores)
    betas = np.empty_like(state_scores)
    n = state_scores.shape[0]
    alphas[0] = state_scores[0]
    for t in range(1, n):
        alphas[t] = state_scores[t] + _logsumexp_cols(alphas[t - 1][:, None] + transitions)
    betas[n - 1] = 0.0
    for t in range(n - 2, -1, -1):
        betas[t] = _logsumexp_rows(transitions + (state_scores[t + 1] + betas[t + 1])[None, :])
    log_z = float(_logsumexp_vec(alphas[n - 1]))
    return log_z, alphas, betas


try:  # the jit kernel only removes per-position dispatch overhead
    from numba import njit

    @njit(cache=True)
    def _forward_backward_jit(state_scores, transitions):  # pragma: no cover
        n, k = state_scores.shape
        alphas = np.empty((n, k))
        betas = np.empty((n, k))
        for y in range(k):
            alphas[0, y] = state_scores[0, y]
            betas[n - 1, y] = 0.0
        for t in range(1, n):
            for y in range(k):
                m = alphas[t - 1, 0] + transitions[0, y]
                for x in range(1, k):
                    v = alphas[t - 1, x] + transitions[x, y]
                    if v > m:
                        m = v
                acc = 0.0
                for x in range(k):
                    acc += np.exp(alphas[t - 1, x] + transitions[x, y] - m)
                alphas[t, y] = state_scores[t, y] + m + np.log(acc)
        for t in range(n - 2, -1, -1):
            for x in range(k):
                m = transitions[x, 0] + state_scores[t + 1, 0] + betas[t + 1, 0]
                for y in range(1, k):
                    v = transitions[x, y] + state_scores[t + 1, y] + betas[t + 1, y]
                    if v > m:
                        m = v
                acc = 0.0
                for y in range(k):
                    acc += np.exp(
                        transitions[x, y] + state_scores[t + 1, y] + betas[t + 1, y] - m
                    )
                betas[t, x] = m + np.log(acc)
        m = alphas[n - 1, 0]
        for y in range(1, k):
            if alphas[n - 1, y] > m:
                m = alphas[n - 1, y]
        acc = 0.0
        for y in range(k):
            acc += np.exp(alphas[n - 1, y] - m)
        log_z = m + np.log(acc)
        return log_z, alphas, betas

except ImportError:  # pragma: no cover
    _forward_backward_jit = None


def forward_backward(state_scores: np.ndarray, transitions: np.ndarray):
    """Return (log_partition, alphas, betas) for one sequence."""
    if state_scores.shape[0] == 0:
        raise ValueError("empty sequence")
    if _forward_backward_jit is not None:
        log_z, alphas, betas = _forward_backward_jit(
            np.ascontiguousarray(state_scores), np.ascontiguousarray(transitions)
        )
        return float(log_z), alphas, betas
    return _forward_backward_numpy(state_scores, transitions)


def _logsumexp_vec(v: np.ndarray) -> float:
    m = v.max()
    return m + np.log(np.exp(v - m).sum())

def _logsumexp_cols(m: np.ndarray) -> np.ndarray:
    mx = m.max(axis=0)
    return mx + np.log(np.exp(m - mx[None, :]).sum(axis=0))

def _logsumexp_rows(m: np.ndarray) -> np.ndarray:
    mx = m.max(axis=1)
    return mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))


def log_partition(model: CrfModel, features: FeatureSequence):
    """Log of the summed exponentiated scores, plus per-position marginals."""
    if not features:
        raise ValueError("empty sequence")
    indexed = model.index(features)
    scores = model.state_scores(indexed)
    log_z, alphas, betas = forward_backward(scores, model.transition_weights)
    marginals = np.exp(alphas + betas - log_z)
    marginals /= marginals.sum(axis=1, keepdims=True)
    return log_z, marginals


def viterbi_decode(model: CrfModel, features: FeatureSequence) -> list[IobLabel]:
    """Highest-scoring labelling; ties resolve to the earlier label in B < I < O.

    np.argmax returns the first maximal index, so both the backpointers and the
    final state inherit that canonical order.
    """
    if not features:
        raise ValueError("empty sequence")
    indexed = model.index(features)
    scores = model.state_scores(indexed)
    n = scores.shape[0]
    best = scores[0].copy()
    backpointers = np.zeros((n, N_LABELS), dtype=np.int8)
    transitions = model.transition_weights
    for t in range(1, n):
        candidate = best[:, None] + transitions
        backpointers[t] = candidate.argmax(axis=0)
        best = scores[t] + candidate.max(axis=0)
    state = int(best.argmax())
    path = [state]
    for t in range(n - 1, 0, -1):
        state = int(backpointers[t, state])
        path.append(state)
    path.reverse()
    return [LABELS[s] for s in path]


def decode_document(model: CrfModel, doc) -> list[IobLabel]:
    from .features import extract_features

    return viterbi_decode(model, extract_features(doc))


def save_model(model: CrfModel, path) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "labels": [l.value for l in LABELS],
        "feature_index": model.feature_index,
        "state_weights": model.state_weights.tolist(),
        "transition_weights": model.transition_weights.tolist(),
        "metadata": model.metadata,
    }
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> CrfModel:
    try:
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"model format version {version!r} not supported (expected {FORMAT_VERSION})"
        )
    if payload.get("labels") != [l.value for l in LABELS]:
        raise DataError("model label set does not match B/I/O")
    return CrfModel(
        feature_index=payload["feature_index"],
        state_weights=np.asarray(payload["state_weights"], dtype=float),
        transition_weights=np.asarray(payload["transition_weights"], dtype=float),
        metadata=payload.get("metadata", {}),
    )
