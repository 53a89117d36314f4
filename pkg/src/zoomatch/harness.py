"""Leave-one-out evaluation of the full pipeline, plus the sparsity and
input-ablation experiments and the train/predict paths the CLI exposes.

Every fold holds out one dataset: its performance edges leave the graph (the
dataset keeps its vertex and similarity edges), walks/embeddings/ranker are
retrained on what remains, and the held-out dataset's model ordering is
predicted and scored. All randomness derives from the run seed through
per-fold stage tags, so reports are byte-identical across reruns.

Ablation zero-masks input segments instead of retraining with narrower rows,
keeping the ranker input width constant across modes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .baselines import baseline_direct, baseline_initial, baseline_overall
from .errors import ConfigError, DataError
from .features import (
    FeatureSchema,
    ModelCard,
    TrainingRow,
    assemble_row,
    dataset_feature,
    encode_model,
    fit_schema,
)
from .gbdt import (
    GbdtModel,
    make_rank_labels,
    predict_rank_scores,
    select_best,
    train_gbdt,
    untrained_model,
)
from .graph import (
    EdgeKind,
    MatchingGraph,
    VertexKind,
    build_graph,
    dataset_vertex,
    drop_performance_edges,
    insert_query_dataset,
    model_vertex,
    pairwise_frechet,
)
from .ioutil import dump_json, write_text_atomic
from .metrics import metric_o2b, metric_o2o, metric_osr, metric_weighted_kendall
from .perf import PerfTable
from .seeds import (
    TAG_DIRECT_RF,
    TAG_EDGE_DROP,
    TAG_FOLD,
    TAG_SGNS_INIT,
    TAG_WALKS,
    check_seed,
    derive_seed,
)
from .stats import EmbeddingStats
from .walks import NodeEmbedding, WalkConfig, edge_embedding, generate_walks, train_node_embeddings

MODES = ("both", "features_only", "graph_only")


@dataclass(frozen=True)
class PipelineConfig:
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 80
    walks_per_vertex: int = 10
    emb_dim: int = 128
    window: int = 5
    negatives: int = 5
    sgns_epochs: int = 5
    sgns_lr: float = 0.025
    rounds: int = 300
    depth: int = 4
    gbdt_lr: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        check_seed(self.seed)
        if not (self.p > 0 and self.q > 0):
            raise ConfigError(f"p and q must be > 0, got p={self.p}, q={self.q}")
        if self.walk_length < 2:
            raise ConfigError(f"walk_length must be >= 2, got {self.walk_length}")
        if self.walks_per_vertex < 1:
            raise ConfigError(f"walks_per_vertex must be >= 1, got {self.walks_per_vertex}")
        if self.emb_dim < 1 or self.window < 1:
            raise ConfigError("emb_dim and window must be >= 1")
        if self.negatives < 0 or self.sgns_epochs < 0 or self.rounds < 0:
            raise ConfigError("negatives, sgns_epochs, and rounds must be >= 0")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if not (self.sgns_lr > 0 and self.gbdt_lr > 0):
            raise ConfigError("learning rates must be > 0")

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_json_dict(d: Mapping) -> "PipelineConfig":
        fields = {f.name for f in dataclasses.fields(PipelineConfig)}
        unknown = set(d) - fields
        if unknown:
            raise ConfigError(f"unknown pipeline config keys: {sorted(unknown)}")
        try:
            return PipelineConfig(**dict(d))
        except TypeError as e:
            raise ConfigError(f"bad pipeline config: {e}") from e


@dataclass(frozen=True)
class FoldResult:
    selected: str
    predicted_order: list[str]
    true_order: list[str]
    tau_w: float


@dataclass(frozen=True)
class EvalReport:
    per_dataset: dict[str, FoldResult]
    aggregates: dict[str, float]
    baselines: dict[str, dict[str, float]]
    config: dict
    diagnostics: dict

    def to_json_dict(self) -> dict:
        return {
            "aggregates": self.aggregates,
            "baselines": self.baselines,
            "config": self.config,
            "diagnostics": self.diagnostics,
            "per_dataset": {
                d: {
                    "selected": fr.selected,
                    "predicted_order": fr.predicted_order,
                    "true_order": fr.true_order,
                    "tau_w": fr.tau_w,
                }
                for d, fr in self.per_dataset.items()
            },
        }

    def to_json(self) -> str:
        return dump_json(self.to_json_dict())

    def to_csv(self) -> str:
        lines = ["dataset,selected,true_best,tau_w"]
        for d in sorted(self.per_dataset):
            fr = self.per_dataset[d]
            lines.append(f"{d},{fr.selected},{fr.true_order[0]},{fr.tau_w!r}")
        for key in sorted(self.aggregates):
            lines.append(f"# {key}={self.aggregates[key]!r}")
        return "\n".join(lines) + "\n"


def save_report(report: EvalReport, json_path: str | Path, csv_path: str | Path | None = None) -> None:
    write_text_atomic(json_path, report.to_json())
    if csv_path is not None:
        write_text_atomic(csv_path, report.to_csv())


def _mask_row(row: TrainingRow, mode: str) -> TrainingRow:
    if mode == "both":
        return row
    wm, wd, _ = row.segments
    masked = row.input.copy()
    if mode == "features_only":
        masked[wm + wd :] = 0.0
    elif mode == "graph_only":
        masked[: wm + wd] = 0.0
    else:
        raise ConfigError(f"unknown ablation mode {mode!r}; pick one of {MODES}")
    return dataclasses.replace(row, input=masked)


def _true_order(truth: PerfTable, dataset_id: str) -> list[str]:
    col = truth.column(dataset_id)
    return sorted(col, key=lambda m: (round(col[m], 6), m))


def _perf_from_graph(g: MatchingGraph) -> PerfTable:
    scores = {}
    for e in g.edges_of_kind(EdgeKind.PERFORMANCE):
        m = e.u.name if e.u.kind is VertexKind.MODEL else e.v.name
        d = e.v.name if e.u.kind is VertexKind.MODEL else e.u.name
        scores[(m, d)] = e.distance
    return PerfTable(scores=scores)


def _embed_fold(
    g: MatchingGraph, cfg: PipelineConfig, fold_seed: int
) -> NodeEmbedding:
    walks = generate_walks(
        g,
        WalkConfig(
            p=cfg.p,
            q=cfg.q,
            walk_length=cfg.walk_length,
            walks_per_vertex=cfg.walks_per_vertex,
            seed=derive_seed(fold_seed, TAG_WALKS),
        ),
    )
    return train_node_embeddings(
        walks,
        emb_dim=cfg.emb_dim,
        window=cfg.window,
        negatives=cfg.negatives,
        epochs=cfg.sgns_epochs,
        lr=cfg.sgns_lr,
        seed=derive_seed(fold_seed, TAG_SGNS_INIT),
        vocab=g.vertices,
    )


def _check_complete(perf: PerfTable, model_ids: Sequence[str], dataset_ids: Sequence[str]) -> None:
    missing = [
        (m, d) for m in model_ids for d in dataset_ids if (m, d) not in perf.scores
    ]
    if missing:
        raise DataError(
            f"incomplete performance table: {len(missing)} missing entries, first {missing[0]}"
        )
    extra = set(perf.scores) - {(m, d) for m in model_ids for d in dataset_ids}
    if extra:
        raise DataError(f"performance entries outside zoo/datasets: {sorted(extra)[0]}")


def run_loo(
    zoo: Sequence[ModelCard],
    datasets: Mapping[str, EmbeddingStats],
    perf: PerfTable,
    cfg: PipelineConfig,
    *,
    mode: str = "both",
    sparsity_fraction: float = 0.0,
    compute_baselines: bool = True,
) -> EvalReport:
    if mode not in MODES:
        raise ConfigError(f"unknown ablation mode {mode!r}; pick one of {MODES}")
    if not (0.0 <= sparsity_fraction <= 1.0):
        raise ConfigError(f"sparsity fraction must lie in [0, 1], got {sparsity_fraction}")
    cards = sorted(zoo, key=lambda c: c.model_id)
    model_ids = [c.model_id for c in cards]
    dataset_ids = sorted(datasets)
    _check_complete(perf, model_ids, dataset_ids)

    schema = fit_schema(cards)
    model_feats = {c.model_id: encode_model(c, schema) for c in cards}
    sim_cache = pairwise_frechet(dict(datasets))

    selections: dict[str, str] = {}
    per_dataset: dict[str, FoldResult] = {}
    tau_ws: list[float] = []
    max_loss_increase = 0.0
    leakage_checks = 0
    base_sel: dict[str, dict[str, str]] = {b: {} for b in ("overall", "initial", "direct")}
    base_taus: dict[str, list[float]] = {b: [] for b in ("overall", "initial", "direct")}
    have_initial = perf.initial is not None

    for fold_index, held_out in enumerate(dataset_ids):
        fold_seed = derive_seed(cfg.seed, TAG_FOLD, fold_index)
        perf_train = perf.without_dataset(held_out)
        g = build_graph(perf_train, dict(datasets), model_ids, similarity=sim_cache)
        if sparsity_fraction > 0.0:
            g = drop_performance_edges(
                g, sparsity_fraction, derive_seed(fold_seed, TAG_EDGE_DROP)
            )
        emb = _embed_fold(g, cfg, fold_seed)
        reduced_perf = _perf_from_graph(g)
        labels = make_rank_labels(reduced_perf) if reduced_perf.scores else {}

        rows = []
        for (m, d) in sorted(labels):
            row = assemble_row(
                model_feats[m],
                dataset_feature(datasets[d]),
                edge_embedding(
                    emb.vector(model_vertex(m)), emb.vector(dataset_vertex(d))
                ),
                label=labels[(m, d)],
                model_id=m,
                dataset_id=d,
            )
            rows.append(_mask_row(row, mode))

        leaked = [r for r in rows if r.dataset_id == held_out]
        if leaked:
            raise AssertionError(
                f"leakage: {len(leaked)} training rows reference held-out {held_out!r}"
            )
        leakage_checks += 1

        width = schema.width + datasets[held_out].dim + cfg.emb_dim
        try:
            model = train_gbdt(
                rows,
                rounds=cfg.rounds,
                depth=cfg.depth,
                lr=cfg.gbdt_lr,
                seed=fold_seed,
                num_classes=len(model_ids),
            )
        except DataError:
            model = untrained_model(len(model_ids), width, fold_seed)
        curve = model.train_loss_curve
        if len(curve) > 1:
            max_loss_increase = max(max_loss_increase, float(np.max(np.diff(curve))))

        dists = {}
        for m in model_ids:
            qrow = assemble_row(
                model_feats[m],
                dataset_feature(datasets[held_out]),
                edge_embedding(
                    emb.vector(model_vertex(m)), emb.vector(dataset_vertex(held_out))
                ),
                label=None,
                model_id=m,
                dataset_id=held_out,
            )
            dists[m] = predict_rank_scores(model, _mask_row(qrow, mode).input)
        ordering = select_best(dists)
        true_order = _true_order(perf, held_out)
        tau = metric_weighted_kendall(ordering, true_order)
        selections[held_out] = ordering[0]
        tau_ws.append(tau)
        per_dataset[held_out] = FoldResult(
            selected=ordering[0],
            predicted_order=ordering,
            true_order=true_order,
            tau_w=tau,
        )

        if compute_baselines:
            overall = baseline_overall(perf_train)
            base_sel["overall"][held_out] = overall[0]
            base_taus["overall"].append(metric_weighted_kendall(overall, true_order))
            if have_initial:
                init_col = {m: perf.initial[(m, held_out)] for m in model_ids
                            if (m, held_out) in perf.initial}
                if len(init_col) != len(model_ids):
                    means: dict[str, list[float]] = {m: [] for m in model_ids}
                    for (m, d2), v in perf.initial.items():
                        if d2 != held_out:
                            means[m].append(v)
                    init_col = {
                        m: float(np.mean(vs)) for m, vs in means.items() if vs
                    }
                initial = baseline_initial(init_col)
                base_sel["initial"][held_out] = initial[0]
                base_taus["initial"].append(metric_weighted_kendall(initial, true_order))
            train_ds = [d for d in dataset_ids if d != held_out]
            labels_full = make_rank_labels(perf_train)
            rank_vectors = np.array(
                [[labels_full[(m, d)] for m in model_ids] for d in train_ds],
                dtype=np.float64,
            )
            feats = np.stack([dataset_feature(datasets[d]) for d in train_ds])
            direct = baseline_direct(
                feats,
                rank_vectors,
                model_ids,
                dataset_feature(datasets[held_out]),
                seed=derive_seed(fold_seed, TAG_DIRECT_RF),
            )
            base_sel["direct"][held_out] = direct[0]
            base_taus["direct"].append(metric_weighted_kendall(direct, true_order))

    aggregates = {
        "osr": metric_osr(selections, perf),
        "kendall_tau_w": float(np.mean(tau_ws)),
        "o2b": metric_o2b(selections, perf),
        "o2o": metric_o2o(selections, perf),
    }
    baselines = {}
    if compute_baselines:
        for name, sel in base_sel.items():
            if not sel:
                continue
            baselines[name] = {
                "osr": metric_osr(sel, perf),
                "kendall_tau_w": float(np.mean(base_taus[name])),
                "o2b": metric_o2b(sel, perf),
                "o2o": metric_o2o(sel, perf),
            }
    config = dict(cfg.to_json_dict())
    config["mode"] = mode
    config["sparsity_fraction"] = float(sparsity_fraction)
    diagnostics = {
        "leakage_checks": leakage_checks,
        "gbdt_max_loss_increase": max_loss_increase,
    }
    return EvalReport(
        per_dataset=per_dataset,
        aggregates=aggregates,
        baselines=baselines,
        config=config,
        diagnostics=diagnostics,
    )


def run_ablation(
    mode: str,
    zoo: Sequence[ModelCard],
    datasets: Mapping[str, EmbeddingStats],
    perf: PerfTable,
    cfg: PipelineConfig,
    *,
    compute_baselines: bool = False,
) -> EvalReport:
    return run_loo(
        zoo, datasets, perf, cfg, mode=mode, compute_baselines=compute_baselines
    )


@dataclass(frozen=True)
class SparsityResult:
    fractions: tuple[float, ...]
    seeds: tuple[int, ...]
    osr: dict[float, list[float]]  # fraction -> per-seed OSR

    def mean_osr(self, fraction: float) -> float:
        return float(np.mean(self.osr[fraction]))

    def stddev(self, fraction: float) -> float:
        vals = self.osr[fraction]
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    def to_json_dict(self) -> dict:
        return {
            "cells": [
                {"fraction": f, "seed": s, "osr": self.osr[f][i]}
                for f in self.fractions
                for i, s in enumerate(self.seeds)
            ],
            "summary": [
                {"fraction": f, "mean_osr": self.mean_osr(f), "stddev": self.stddev(f)}
                for f in self.fractions
            ],
        }

    def to_tsv(self) -> str:
        lines = ["fraction\tmean_osr\tstddev"]
        for f in self.fractions:
            lines.append(f"{f!r}\t{self.mean_osr(f)!r}\t{self.stddev(f)!r}")
        return "\n".join(lines) + "\n"


def run_sparsity(
    zoo: Sequence[ModelCard],
    datasets: Mapping[str, EmbeddingStats],
    perf: PerfTable,
    cfg: PipelineConfig,
    fractions: Sequence[float],
    seeds: Sequence[int],
) -> SparsityResult:
    for f in fractions:
        if not (0.0 <= f <= 1.0):
            raise ConfigError(f"sparsity fraction must lie in [0, 1], got {f}")
    if not seeds:
        raise ConfigError("need at least one seed")
    osr: dict[float, list[float]] = {float(f): [] for f in fractions}
    for f in fractions:
        for s in seeds:
            report = run_loo(
                zoo,
                datasets,
                perf,
                dataclasses.replace(cfg, seed=int(s)),
                sparsity_fraction=float(f),
                compute_baselines=False,
            )
            osr[float(f)].append(report.aggregates["osr"])
    return SparsityResult(
        fractions=tuple(float(f) for f in fractions),
        seeds=tuple(int(s) for s in seeds),
        osr=osr,
    )


@dataclass(frozen=True)
class TrainedPipeline:
    schema: FeatureSchema
    graph: MatchingGraph
    embeddings: NodeEmbedding
    ranker: GbdtModel
    config: PipelineConfig


def train_pipeline(
    zoo: Sequence[ModelCard],
    datasets: Mapping[str, EmbeddingStats],
    perf: PerfTable,
    cfg: PipelineConfig,
) -> TrainedPipeline:
    """Fit schema, graph, embeddings, and ranker on the full table."""
    cards = sorted(zoo, key=lambda c: c.model_id)
    model_ids = [c.model_id for c in cards]
    dataset_ids = sorted(datasets)
    _check_complete(perf, model_ids, dataset_ids)
    schema = fit_schema(cards)
    model_feats = {c.model_id: encode_model(c, schema) for c in cards}
    g = build_graph(perf, dict(datasets), model_ids)
    emb = _embed_fold(g, cfg, cfg.seed)
    labels = make_rank_labels(perf)
    rows = [
        assemble_row(
            model_feats[m],
            dataset_feature(datasets[d]),
            edge_embedding(emb.vector(model_vertex(m)), emb.vector(dataset_vertex(d))),
            label=labels[(m, d)],
            model_id=m,
            dataset_id=d,
        )
        for (m, d) in sorted(labels)
    ]
    ranker = train_gbdt(
        rows,
        rounds=cfg.rounds,
        depth=cfg.depth,
        lr=cfg.gbdt_lr,
        seed=cfg.seed,
        num_classes=len(model_ids),
    )
    return TrainedPipeline(schema=schema, graph=g, embeddings=emb, ranker=ranker, config=cfg)


def predict_query(
    graph: MatchingGraph,
    zoo: Sequence[ModelCard],
    datasets: Mapping[str, EmbeddingStats],
    query_id: str,
    query_stats: EmbeddingStats,
    schema: FeatureSchema,
    ranker: GbdtModel,
    cfg: PipelineConfig,
) -> list[tuple[int, str, float]]:
    """Insert the query dataset, re-embed, and rank the zoo for it.

    Returns (rank, model_id, expected_rank) triples, best first. The walk
    and SGNS stages rerun on the augmented graph so the query vertex gets a
    trained embedding; the ranker itself is reused as persisted.
    """
    cards = sorted(zoo, key=lambda c: c.model_id)
    g2 = insert_query_dataset(graph, query_id, query_stats, dict(datasets))
    emb = _embed_fold(g2, cfg, cfg.seed)
    dists = {}
    for c in cards:
        row = assemble_row(
            encode_model(c, schema),
            dataset_feature(query_stats),
            edge_embedding(
                emb.vector(model_vertex(c.model_id)), emb.vector(dataset_vertex(query_id))
            ),
            label=None,
            model_id=c.model_id,
            dataset_id=query_id,
        )
        dists[c.model_id] = predict_rank_scores(ranker, row.input)
    ordering = select_best(dists)
    expected = {
        m: float(np.sum(np.arange(1, len(cards) + 1) * dists[m])) for m in dists
    }
    return [(i + 1, m, expected[m]) for i, m in enumerate(ordering)]
