"""Selection-quality metrics over a ground-truth performance table.

All four treat lower scores as better. Tie-breaks for "true best" reuse the
rank-label rule (score rounded to 1e-6, then model_id) so metrics and labels
never disagree on what optimal means.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .errors import DataError, InputError
from .perf import PerfTable


def true_best(truth: PerfTable, dataset_id: str) -> str:
    col = truth.column(dataset_id)
    if not col:
        raise DataError(f"no truth scores for dataset {dataset_id!r}")
    return min(col, key=lambda m: (round(col[m], 6), m))


def metric_osr(selections: Mapping[str, str], truth: PerfTable) -> float:
    """Fraction of datasets whose selected model is the true best."""
    if not selections:
        raise DataError("no selections")
    hits = 0
    for d, m in selections.items():
        if (m, d) not in truth.scores:
            raise DataError(f"missing truth score for ({m!r}, {d!r})")
        if m == true_best(truth, d):
            hits += 1
    return hits / len(selections)


def metric_weighted_kendall(pred_order: Sequence[str], true_order: Sequence[str]) -> float:
    """Rank correlation with hyperbolic weights on true ranks.

    tau_w = sum_{i<j} w_ij c_ij / sum_{i<j} w_ij over unordered id pairs,
    c_ij = +1 when both orders agree on the pair, -1 otherwise, and
    w_ij = 1/(r_i+1) + 1/(r_j+1) with r the zero-indexed true ranks.
    """
    if len(pred_order) < 2:
        raise InputError("orders need at least 2 entries")
    if len(set(pred_order)) != len(pred_order) or set(pred_order) != set(true_order):
        raise InputError("orders must be permutations of one id set")
    true_rank = {m: i for i, m in enumerate(true_order)}
    pred_rank = {m: i for i, m in enumerate(pred_order)}
    ids = list(true_order)
    num = 0.0
    den = 0.0
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            i, j = ids[a], ids[b]
            w = 1.0 / (true_rank[i] + 1) + 1.0 / (true_rank[j] + 1)
            same = (true_rank[i] < true_rank[j]) == (pred_rank[i] < pred_rank[j])
            num += w if same else -w
            den += w
    return num / den


def overall_best_model(truth: PerfTable) -> str:
    """Model with the lowest mean score over every dataset in the table."""
    means = truth.mean_scores()
    if not means:
        raise DataError("empty truth table")
    return min(means, key=lambda m: (means[m], m))


def metric_o2b(selections: Mapping[str, str], truth: PerfTable) -> float:
    """Mean score gap between the selected models and the single model that
    is best on average; negative means the selections beat it."""
    if not selections:
        raise DataError("no selections")
    b = overall_best_model(truth)
    total = 0.0
    for d, m in selections.items():
        if (m, d) not in truth.scores or (b, d) not in truth.scores:
            raise DataError(f"missing truth score for dataset {d!r}")
        total += truth.score(m, d) - truth.score(b, d)
    return total / len(selections)


def metric_o2o(selections: Mapping[str, str], truth: PerfTable) -> float:
    """Mean score gap to the per-dataset optimum; always >= 0."""
    if not selections:
        raise DataError("no selections")
    total = 0.0
    for d, m in selections.items():
        col = truth.column(d)
        if m not in col:
            raise DataError(f"missing truth score for ({m!r}, {d!r})")
        total += col[m] - min(col.values())
    return total / len(selections)
