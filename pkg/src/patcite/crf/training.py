"""Maximum-likelihood CRF training.

Minimizes the L2-regularized negative log-likelihood with a batch
quasi-Newton optimizer (L-BFGS with Wolfe line search, via scipy). The
gradient is observed minus expected feature counts, expectations coming from
forward-backward marginals. Training is deterministic given the configuration
and document order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ..corpus import LABEL_TO_INDEX, LabeledDocument, is_well_formed
from ..errors import DataError
from .features import extract_features
from .model import N_LABELS, CrfModel, forward_backward


class TrainingError(DataError):
    """Optimization failed (non-finite objective or no usable training data)."""


@dataclass(frozen=True)
class TrainConfig:
    l2_sigma: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-5

    def __post_init__(self):
        if self.l2_sigma <= 0:
            raise ValueError("l2_sigma must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class _PreparedDoc:
    feat_ids: np.ndarray  # int32, all features flattened in position order
    positions: np.ndarray  # int32, owning position of each entry in feat_ids
    labels: np.ndarray  # int8 gold label indices


def _prepare(docs: Sequence[LabeledDocument]):
    feature_index: dict[str, int] = {}
    prepared: list[_PreparedDoc] = []
    for doc in docs:
        if doc.gold_labels is None:
            raise DataError(f"document {doc.doc_id!r} has no gold labels")
        if not is_well_formed(doc.gold_labels):
            raise DataError(f"document {doc.doc_id!r} has ill-formed gold labels")
        ids: list[int] = []
        positions: list[int] = []
        for p, feats in enumerate(extract_features(doc)):
            for feat in feats:
                fid = feature_index.setdefault(feat, len(feature_index))
                ids.append(fid)
                positions.append(p)
        prepared.append(
            _PreparedDoc(
                np.asarray(ids, dtype=np.int32),
                np.asarray(positions, dtype=np.int32),
                np.asarray([LABEL_TO_INDEX[l] for l in doc.gold_labels], dtype=np.int8),
            )
        )
    return feature_index, prepared


def _observed_counts(prepared, n_features):
    obs_state = np.zeros((n_features, N_LABELS))
    obs_trans = np.zeros((N_LABELS, N_LABELS))
    for doc in prepared:
        np.add.at(obs_state, (doc.feat_ids, doc.labels[doc.positions]), 1.0)
        if len(doc.labels) > 1:
            np.add.at(obs_trans, (doc.labels[:-1], doc.labels[1:]), 1.0)
    return obs_state, obs_trans


def build_objective(docs: Sequence[LabeledDocument], config: TrainConfig):
    """Return (objective, n_parameters, feature_index).

    The objective maps a flat weight vector to (regularized negative
    log-likelihood, gradient); parameters are the state weights row-major
    followed by the 3x3 transition weights.
    """
    feature_index, prepared = _prepare(docs)
    n_features = len(feature_index)
    obs_state, obs_trans = _observed_counts(prepared, n_features)
    n_state = n_features * N_LABELS
    inv_sigma_sq = 1.0 / (config.l2_sigma**2)

    def objective(w_flat):
        state = w_flat[:n_state].reshape(n_features, N_LABELS)
        trans = w_flat[n_state:].reshape(N_LABELS, N_LABELS)
        nll = 0.0
        exp_state = np.zeros_like(state)
        exp_trans = np.zeros_like(trans)
        for doc in prepared:
            n = len(doc.labels)
            gathered = state[doc.feat_ids]
            scores = np.empty((n, N_LABELS))
            for y in range(N_LABELS):
                scores[:, y] = np.bincount(
                    doc.positions, weights=gathered[:, y], minlength=n
                )
            log_z, alphas, betas = forward_backward(scores, trans)
            gold = float(scores[np.arange(n), doc.labels].sum())
            if n > 1:
                gold += float(trans[doc.labels[:-1], doc.labels[1:]].sum())
                pairwise = np.exp(
                    alphas[:-1, :, None]
                    + trans[None, :, :]
                    + (scores[1:] + betas[1:])[:, None, :]
                    - log_z
                )
                exp_trans += pairwise.sum(axis=0)
            nll += log_z - gold
            marginal_rows = np.exp(alphas + betas - log_z)[doc.positions]
            for y in range(N_LABELS):
                exp_state[:, y] += np.bincount(
                    doc.feat_ids, weights=marginal_rows[:, y], minlength=n_features
                )
        nll += 0.5 * inv_sigma_sq * float(w_flat @ w_flat)
        if not np.isfinite(nll):
            raise TrainingError(
                "objective is not finite; check features and l2_sigma"
            )
        grad = np.concatenate(
            (
                (exp_state - obs_state).ravel(),
                (exp_trans - obs_trans).ravel(),
            )
        )
        grad += inv_sigma_sq * w_flat
        return nll, grad

    return objective, n_state + N_LABELS * N_LABELS, feature_index


def train(docs: Sequence[LabeledDocument], config: TrainConfig = TrainConfig()) -> CrfModel:
    if not docs:
        raise TrainingError("no training documents")
    objective, n_params, feature_index = build_objective(docs, config)
    n_features = len(feature_index)
    n_state = n_features * N_LABELS
    result = minimize(
        objective,
        np.zeros(n_params),
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": config.max_iterations,
            "ftol": config.tolerance,
            "gtol": config.tolerance,
        },
    )
    weights = result.x
    return CrfModel(
        feature_index=feature_index,
        state_weights=weights[:n_state].reshape(n_features, N_LABELS).copy(),
        transition_weights=weights[n_state:].reshape(N_LABELS, N_LABELS).copy(),
        metadata={
            "iterations": int(result.nit),
            "l2_sigma": config.l2_sigma,
            "tolerance": config.tolerance,
            "max_iterations": config.max_iterations,
            "final_nll": float(result.fun),
            "converged": bool(result.success),
        },
    )
