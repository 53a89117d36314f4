"""The three reference selectors the pipeline is compared against.

Overall ranks models by mean score over the training datasets. Initial ranks
them by pre-fine-tuning score on the target (falling back to the per-model
mean when no per-target column exists). Direct is a from-scratch random
forest over dataset feature vectors alone: each tree is grown on a bootstrap
sample with gini splits on the best-model class, leaves store the mean of
the per-model rank vectors that reach them, and the forest prediction is the
ascending argsort of the averaged vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, InputError
from .perf import PerfTable
from .seeds import TAG_DIRECT_RF, derive_rng

RF_TREES = 100


def baseline_overall(truth_minus_target: PerfTable) -> list[str]:
    means = truth_minus_target.mean_scores()
    if not means:
        raise DataError("empty training table")
    return sorted(means, key=lambda m: (means[m], m))


def baseline_initial(initial_scores: Mapping[str, float]) -> list[str]:
    if not initial_scores:
        raise DataError("no initial scores")
    return sorted(initial_scores, key=lambda m: (initial_scores[m], m))


@dataclass(frozen=True)
class _RfNode:
    feature: int
    threshold: float
    left: "_RfNode | None"
    right: "_RfNode | None"
    value: np.ndarray | None  # mean rank vector at leaves

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = self
        while node.value is None:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _grow_rf_node(
    X: np.ndarray,
    Y: np.ndarray,
    best_cls: np.ndarray,
    idx: np.ndarray,
    n_classes: int,
    mtry: int,
    rng: np.random.Generator,
) -> _RfNode:
    labels = best_cls[idx]
    if idx.size < 2 or np.all(labels == labels[0]):
        return _RfNode(-1, 0.0, None, None, Y[idx].mean(axis=0))

    feats = np.sort(rng.choice(X.shape[1], size=mtry, replace=False))
    best = (np.inf, -1, 0.0)
    for f in feats:
        col = X[idx, f]
        uniq = np.unique(col)
        if uniq.size < 2:
            continue
        for t in (uniq[:-1] + uniq[1:]) / 2.0:
            mask = col <= t
            nl = int(mask.sum())
            if nl == 0 or nl == idx.size:
                continue
            cl = np.bincount(labels[mask], minlength=n_classes)
            cr = np.bincount(labels[~mask], minlength=n_classes)
            score = (nl * _gini(cl) + (idx.size - nl) * _gini(cr)) / idx.size
            if score < best[0] - 1e-15:
                best = (score, int(f), float(t))
    if best[1] < 0:
        return _RfNode(-1, 0.0, None, None, Y[idx].mean(axis=0))
    _, f, t = best
    mask = X[idx, f] <= t
    return _RfNode(
        f,
        t,
        _grow_rf_node(X, Y, best_cls, idx[mask], n_classes, mtry, rng),
        _grow_rf_node(X, Y, best_cls, idx[~mask], n_classes, mtry, rng),
        None,
    )


def baseline_direct(
    train_feats: np.ndarray,
    train_rank_vectors: np.ndarray,
    model_ids: Sequence[str],
    query_feat: np.ndarray,
    seed: int,
    n_trees: int = RF_TREES,
) -> list[str]:
    """Forest prediction of the target's model ordering from its features."""
    train_feats = np.asarray(train_feats, dtype=np.float64)
    train_rank_vectors = np.asarray(train_rank_vectors, dtype=np.float64)
    if train_feats.ndim != 2 or train_feats.shape[0] < 2:
        raise DataError("Direct baseline needs at least 2 training datasets")
    if train_rank_vectors.shape != (train_feats.shape[0], len(model_ids)):
        raise InputError(
            f"rank vector shape {train_rank_vectors.shape} does not match "
            f"{train_feats.shape[0]} datasets x {len(model_ids)} models"
        )
    query = np.asarray(query_feat, dtype=np.float64).ravel()
    if query.size != train_feats.shape[1]:
        raise InputError(f"query width {query.size} != feature width {train_feats.shape[1]}")

    n, nfeat = train_feats.shape
    best_cls = np.argmin(train_rank_vectors, axis=1)
    mtry = max(1, int(np.sqrt(nfeat)))
    acc = np.zeros(len(model_ids))
    for t in range(n_trees):
        rng = derive_rng(seed, TAG_DIRECT_RF, t)
        boot = np.sort(rng.integers(0, n, size=n))
        root = _grow_rf_node(
            train_feats, train_rank_vectors, best_cls, boot, len(model_ids), mtry, rng
        )
        acc += root.predict(query)
    acc /= n_trees
    order = sorted(range(len(model_ids)), key=lambda i: (acc[i], model_ids[i]))
    return [model_ids[i] for i in order]
