"""Rank labels and the multiclass gradient-boosted tree rank predictor.

Boosting minimizes softmax log-loss: every round fits one depth-limited
regression tree per class to the residual one_hot(y) - p, with leaf values
set by the damped Newton step ((K-1)/K) * sum(r) / (sum |r|(1-|r|) + eps).
Splits are found on histograms of at most 64 quantile bins whose cut points
are actual feature values, and a node is always split when any legal split
exists, even at zero gain; with depth-limited trees this is what lets
parity-style targets (e.g. XOR) reach pure leaves.

Training is single-threaded and deterministic; the seed is recorded for
provenance but no stochastic choice consumes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .errors import DataError, FormatError, InputError
from .ioutil import read_json, write_json_atomic
from .perf import PerfTable

MAX_BINS = 64
LEAF_EPS = 1e-6
MODEL_FORMAT_VERSION = 1


def make_rank_labels(perf: PerfTable) -> dict[tuple[str, str], int]:
    """Per-dataset ranks, 1 = lowest (best) score.

    Ties break by score rounded to 1e-6, then model_id, so label assignment
    is stable under float formatting round-trips.
    """
    labels: dict[tuple[str, str], int] = {}
    for d in perf.dataset_ids():
        col = perf.column(d)
        order = sorted(col, key=lambda m: (round(col[m], 6), m))
        for rank, m in enumerate(order, start=1):
            labels[(m, d)] = rank
    return labels


@njit(cache=True)
def _grow_tree(binned, resid, depth, kfac, feat_out, cut_out, left_out, right_out,
               value_out, is_leaf_out, sample_value):
    n, nfeat = binned.shape
    max_bins = 0
    for f in range(nfeat):
        for i in range(n):
            if binned[i, f] + 1 > max_bins:
                max_bins = binned[i, f] + 1
    hist_cnt = np.zeros(max_bins, dtype=np.int64)
    hist_sum = np.zeros(max_bins)
    order = np.arange(n)
    tmp = np.empty(n, dtype=np.int64)

    max_nodes = feat_out.shape[0]
    stack_node = np.empty(max_nodes, dtype=np.int64)
    stack_start = np.empty(max_nodes, dtype=np.int64)
    stack_end = np.empty(max_nodes, dtype=np.int64)
    stack_level = np.empty(max_nodes, dtype=np.int64)
    top = 0
    stack_node[top] = 0
    stack_start[top] = 0
    stack_end[top] = n
    stack_level[top] = 0
    top += 1
    next_id = 1

    while top > 0:
        top -= 1
        nid = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        level = stack_level[top]
        cnt = end - start

        best_gain = -1.0
        best_f = -1
        best_b = -1
        if level < depth and cnt >= 2:
            tot_sum = 0.0
            for k in range(start, end):
                tot_sum += resid[order[k]]
            for f in range(nfeat):
                for b in range(max_bins):
                    hist_cnt[b] = 0
                    hist_sum[b] = 0.0
                top_bin = 0
                for k in range(start, end):
                    b = binned[order[k], f]
                    hist_cnt[b] += 1
                    hist_sum[b] += resid[order[k]]
                    if b > top_bin:
                        top_bin = b
                cl = 0
                sl = 0.0
                for b in range(top_bin):
                    cl += hist_cnt[b]
                    sl += hist_sum[b]
                    cr = cnt - cl
                    if cl == 0 or cr == 0:
                        continue
                    sr = tot_sum - sl
                    gain = sl * sl / cl + sr * sr / cr
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_b = b

        if best_f < 0:
            s = 0.0
            h = 0.0
            for k in range(start, end):
                r = resid[order[k]]
                s += r
                a = abs(r)
                h += a * (1.0 - a)
            v = kfac * s / (h + LEAF_EPS)
            is_leaf_out[nid] = 1
            value_out[nid] = v
            for k in range(start, end):
                sample_value[order[k]] = v
            continue

        nl = 0
        for k in range(start, end):
            if binned[order[k], best_f] <= best_b:
                nl += 1
        li = 0
        ri = nl
        for k in range(start, end):
            idx = order[k]
            if binned[idx, best_f] <= best_b:
                tmp[li] = idx
                li += 1
            else:
                tmp[ri] = idx
                ri += 1
        for k in range(cnt):
            order[start + k] = tmp[k]

        feat_out[nid] = best_f
        cut_out[nid] = best_b
        lid = next_id
        rid = next_id + 1
        next_id += 2
        left_out[nid] = lid
        right_out[nid] = rid
        stack_node[top] = rid
        stack_start[top] = start + nl
        stack_end[top] = end
        stack_level[top] = level + 1
        top += 1
        stack_node[top] = lid
        stack_start[top] = start
        stack_end[top] = start + nl
        stack_level[top] = level + 1
        top += 1
    return next_id


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    is_leaf: np.ndarray

    def predict_one(self, x: np.ndarray) -> float:
        nid = 0
        while not self.is_leaf[nid]:
            if x[self.feature[nid]] <= self.threshold[nid]:
                nid = self.left[nid]
            else:
                nid = self.right[nid]
        return float(self.value[nid])


@dataclass(frozen=True)
class GbdtModel:
    num_classes: int
    feature_count: int
    rounds: int
    depth: int
    lr: float
    seed: int
    trees: tuple[tuple[Tree, ...], ...]  # [round][class]
    train_loss_curve: tuple[float, ...]


def _bin_features(X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Quantile-bin each column; cut points are actual data values and
    bin(x) <= b holds exactly when x <= cuts[b]."""
    n, nfeat = X.shape
    binned = np.zeros((n, nfeat), dtype=np.int64)
    cuts_per_feat: list[np.ndarray] = []
    for f in range(nfeat):
        col = X[:, f]
        uniq = np.unique(col)
        if uniq.size > MAX_BINS:
            qs = np.quantile(col, np.linspace(0.0, 1.0, MAX_BINS + 1)[1:], method="lower")
            cuts = np.unique(qs)
            if cuts[-1] < uniq[-1]:
                cuts[-1] = uniq[-1]
        else:
            cuts = uniq
        binned[:, f] = np.searchsorted(cuts, col, side="left")
        np.clip(binned[:, f], 0, cuts.size - 1, out=binned[:, f])
        cuts_per_feat.append(cuts)
    return binned, cuts_per_feat


def _softmax(F: np.ndarray) -> np.ndarray:
    z = F - F.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def train_gbdt(
    rows: Sequence,
    rounds: int = 300,
    depth: int = 4,
    lr: float = 0.1,
    seed: int = 0,
    num_classes: int | None = None,
) -> GbdtModel:
    if not rows:
        raise DataError("no training rows")
    widths = {r.input.size for r in rows}
    if len(widths) != 1:
        raise InputError(f"inconsistent row widths: {sorted(widths)}")
    labels = [r.label for r in rows]
    if any(l is None for l in labels):
        raise InputError("all training rows need labels")
    if len(set(labels)) < 2:
        raise DataError("training rows carry a single class; need at least 2")
    K = max(labels) if num_classes is None else num_classes
    if K < max(labels):
        raise InputError(f"num_classes={K} below max label {max(labels)}")
    X = np.ascontiguousarray(np.stack([r.input for r in rows]).astype(np.float64))
    y = np.array(labels, dtype=np.int64) - 1
    n, nfeat = X.shape

    binned, cuts_per_feat = _bin_features(X)
    F = np.zeros((n, K))
    onehot = np.zeros((n, K))
    onehot[np.arange(n), y] = 1.0
    kfac = (K - 1.0) / K
    max_nodes = 2 ** (depth + 1) - 1

    curve = [float(-np.mean(np.log(_softmax(F)[np.arange(n), y])))]
    all_trees: list[tuple[Tree, ...]] = []
    for _ in range(rounds):
        P = _softmax(F)
        resid_all = onehot - P
        round_trees: list[Tree] = []
        for k in range(K):
            feat = np.full(max_nodes, -1, dtype=np.int64)
            cutb = np.full(max_nodes, -1, dtype=np.int64)
            left = np.full(max_nodes, -1, dtype=np.int64)
            right = np.full(max_nodes, -1, dtype=np.int64)
            value = np.zeros(max_nodes)
            is_leaf = np.zeros(max_nodes, dtype=np.uint8)
            sample_value = np.zeros(n)
            used = _grow_tree(
                binned, np.ascontiguousarray(resid_all[:, k]), depth, kfac,
                feat, cutb, left, right, value, is_leaf, sample_value,
            )
            thresh = np.zeros(used)
            for nid in range(used):
                if not is_leaf[nid]:
                    thresh[nid] = cuts_per_feat[feat[nid]][cutb[nid]]
            round_trees.append(
                Tree(
                    feature=feat[:used].copy(),
                    threshold=thresh,
                    left=left[:used].copy(),
                    right=right[:used].copy(),
                    value=value[:used].copy(),
                    is_leaf=is_leaf[:used].copy(),
                )
            )
            F[:, k] += lr * sample_value
        all_trees.append(tuple(round_trees))
        curve.append(float(-np.mean(np.log(_softmax(F)[np.arange(n), y]))))

    return GbdtModel(
        num_classes=K,
        feature_count=nfeat,
        rounds=rounds,
        depth=depth,
        lr=lr,
        seed=seed,
        trees=tuple(all_trees),
        train_loss_curve=tuple(curve),
    )


def untrained_model(num_classes: int, feature_count: int, seed: int = 0) -> GbdtModel:
    """Zero-round model: uniform rank distribution for every input."""
    return GbdtModel(
        num_classes=num_classes,
        feature_count=feature_count,
        rounds=0,
        depth=0,
        lr=0.0,
        seed=seed,
        trees=(),
        train_loss_curve=(float(np.log(num_classes)),),
    )


def predict_rank_scores(model: GbdtModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != model.feature_count:
        raise InputError(f"input width {x.size} != feature count {model.feature_count}")
    F = np.zeros(model.num_classes)
    for round_trees in model.trees:
        for k, tree in enumerate(round_trees):
            F[k] += model.lr * tree.predict_one(x)
    z = F - F.max()
    e = np.exp(z)
    return e / e.sum()


def select_best(dists: Mapping[str, np.ndarray]) -> list[str]:
    """Models ordered by expected rank, best first.

    Ties break by probability of rank 1 (descending), then model_id.
    """
    if not dists:
        raise InputError("empty distribution map")
    sizes = {np.asarray(v).size for v in dists.values()}
    if len(sizes) != 1:
        raise InputError(f"distributions disagree on class count: {sorted(sizes)}")
    keyed = []
    for m in sorted(dists):
        p = np.asarray(dists[m], dtype=np.float64)
        expected = float(np.sum(np.arange(1, p.size + 1) * p))
        keyed.append((expected, -float(p[0]), m))
    keyed.sort()
    return [m for _, _, m in keyed]


def _tree_to_dict(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
        "is_leaf": tree.is_leaf.astype(int).tolist(),
    }


def _tree_from_dict(d: dict) -> Tree:
    return Tree(
        feature=np.array(d["feature"], dtype=np.int64),
        threshold=np.array(d["threshold"], dtype=np.float64),
        left=np.array(d["left"], dtype=np.int64),
        right=np.array(d["right"], dtype=np.int64),
        value=np.array(d["value"], dtype=np.float64),
        is_leaf=np.array(d["is_leaf"], dtype=np.uint8),
    )


def save_gbdt(model: GbdtModel, path: str | Path) -> None:
    write_json_atomic(
        path,
        {
            "format_version": MODEL_FORMAT_VERSION,
            "rounds": model.rounds,
            "depth": model.depth,
            "lr": model.lr,
            "num_classes": model.num_classes,
            "feature_count": model.feature_count,
            "seed": model.seed,
            "train_loss_curve": list(model.train_loss_curve),
            "trees": [[_tree_to_dict(t) for t in rt] for rt in model.trees],
        },
    )


def load_gbdt(path: str | Path) -> GbdtModel:
    d = read_json(path)
    try:
        if d["format_version"] != MODEL_FORMAT_VERSION:
            raise FormatError(f"unsupported model format_version {d['format_version']!r}")
        trees = tuple(tuple(_tree_from_dict(t) for t in rt) for rt in d["trees"])
        return GbdtModel(
            num_classes=int(d["num_classes"]),
            feature_count=int(d["feature_count"]),
            rounds=int(d["rounds"]),
            depth=int(d["depth"]),
            lr=float(d["lr"]),
            seed=int(d["seed"]),
            trees=trees,
            train_loss_curve=tuple(float(x) for x in d["train_loss_curve"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed ranker file {path}: {e}") from e
