"""Seeded synthetic zoo + dataset + performance benchmark with planted
cluster structure.

Datasets fall into K clusters. Cluster identity is carried mostly by the
covariance profile of the embedding distribution (distinct per-axis variance
signatures), while cluster means overlap, so pairwise Gaussian distance
separates clusters far better than raw mean features do. Scores follow
score(m, d) = base(m) + affinity(m, cluster(d)) + Normal(0, noise_sigma),
with the affinities rejection-sampled until the planted structure holds:
every cluster has a distinct winner with a margin, the best-on-average model
wins some cluster (so the mean-score baseline stays sane but suboptimal),
and no model wins meaningfully more than one cluster's worth of datasets.
Initial (pre-fine-tuning) scores add a large shuffled per-model offset whose
gaps exceed the score spread, so ranking by them is a pure lottery.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .features import ModelCard, load_zoo, save_model_card
from .ioutil import write_json_atomic, read_json
from .perf import PerfTable, load_perf_csv, save_perf_csv
from .seeds import TAG_SYNTH, check_seed, derive_rng
from .stats import EmbeddingStats, accumulate_stats, load_stats, save_stats

PROBE_ID = "synth-probe-v1"
MAX_REJECTION_ATTEMPTS = 8000

BASE_LO = 3.0
BASE_HI = 4.0
TIER_GAP = 2.0
TOP_JITTER = 0.7
TOP_TIER_P = 0.35
WINNER_MARGIN = 0.2
MEAN_GAP_MIN = 0.25
INITIAL_OFFSET_LO = 5.0
INITIAL_OFFSET_GAP_LO = 8.0
INITIAL_OFFSET_GAP_HI = 12.0
CENTER_SCALE = 0.25


@dataclass(frozen=True)
class SynthConfig:
    n_models: int = 10
    n_datasets: int = 32
    n_clusters: int = 4
    emb_dim: int = 16
    cluster_spread: float = 0.1
    noise_sigma: float = 0.25
    seed: int = 0
    rows_per_dataset: int = 192

    def __post_init__(self) -> None:
        check_seed(self.seed)
        if self.n_models < 2:
            raise ConfigError(f"need at least 2 models, got {self.n_models}")
        if self.n_datasets < 2:
            raise ConfigError(f"need at least 2 datasets, got {self.n_datasets}")
        if not (1 <= self.n_clusters <= self.n_datasets):
            raise ConfigError(
                f"n_clusters must be in [1, n_datasets], got {self.n_clusters}"
            )
        if self.emb_dim < 2:
            raise ConfigError(f"emb_dim must be >= 2, got {self.emb_dim}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.cluster_spread < 0:
            raise ConfigError(f"cluster_spread must be >= 0, got {self.cluster_spread}")
        if self.rows_per_dataset < 2:
            raise ConfigError(f"rows_per_dataset must be >= 2, got {self.rows_per_dataset}")


@dataclass(frozen=True)
class SynthBenchmark:
    cards: list[ModelCard]
    dataset_stats: dict[str, EmbeddingStats]
    perf: PerfTable
    cluster_of: dict[str, int]

    @property
    def model_ids(self) -> list[str]:
        return [c.model_id for c in self.cards]


def _plant_scores(cfg: SynthConfig, model_ids: list[str], cluster_of: dict[str, int]):
    """Rejection-sample (base, affinity, noise) until the planted structure
    holds: pairwise-distinct cluster winners with a margin, and no model
    optimal on every dataset (both skipped when K == 1)."""
    K = cfg.n_clusters
    datasets = sorted(cluster_of)
    need_winners = min(cfg.n_models, K)
    for attempt in range(MAX_REJECTION_ATTEMPTS):
        rng = derive_rng(cfg.seed, TAG_SYNTH, 1, attempt)
        base = rng.uniform(BASE_LO, BASE_HI, size=cfg.n_models)
        # Two affinity tiers per cluster: a handful of near-tied contenders
        # and a clearly worse rest. Near-ties keep the winner learnable from
        # full evidence yet hard to resolve from sparsified labels.
        tier = rng.random((cfg.n_models, K)) < TOP_TIER_P
        for k in range(K):
            if tier[:, k].sum() < 2:
                tier[rng.choice(cfg.n_models, size=2, replace=False), k] = True
        a_top = rng.uniform(0.0, TOP_JITTER, size=(cfg.n_models, K))
        a_low = TIER_GAP + rng.uniform(0.0, 1.0, size=(cfg.n_models, K))
        aff = np.where(tier, a_top, a_low)
        clean = base[:, None] + aff  # (M, K)
        noise = rng.normal(0.0, cfg.noise_sigma, size=(cfg.n_models, cfg.n_datasets))
        scores = {
            (model_ids[i], d): float(
                max(clean[i, cluster_of[d]] + noise[i, j], 1e-3)
            )
            for i in range(cfg.n_models)
            for j, d in enumerate(datasets)
        }
        if K == 1:
            return base, aff, scores
        winners = np.argmin(clean, axis=0)
        margins = np.partition(clean, 1, axis=0)[1] - clean.min(axis=0)
        # distinct winners per cluster keep any one model's win share
        # bounded, so no baseline can ride a single dominant model
        if len(set(winners.tolist())) < need_winners or margins.min() < WINNER_MARGIN:
            continue
        cluster_sizes = np.bincount(
            [cluster_of[d] for d in datasets], minlength=K
        )
        mean_clean = clean[:, [cluster_of[d] for d in datasets]].mean(axis=1)
        # the best-on-average model must actually win some cluster, so the
        # mean-score baseline stays a sane (if weak) selector
        if int(np.argmin(mean_clean)) not in set(winners.tolist()):
            continue
        # the runner-up mean must trail by more than one dataset's leverage
        # on a leave-one-out mean, or per-fold mean-best picks flip
        if np.partition(mean_clean, 1)[1] - mean_clean.min() < MEAN_GAP_MIN:
            continue
        per_dataset_winner = {
            d: min(model_ids, key=lambda m: scores[(m, d)]) for d in datasets
        }
        if len(set(per_dataset_winner.values())) < 2:
            continue
        win_counts = Counter(per_dataset_winner.values())
        # no model may win meaningfully more than one full cluster, even
        # after noise, which bounds the payoff of blind constant selection;
        # the best-on-average model is held to exactly one cluster's worth
        win_cap = cluster_sizes.max() + max(1, cfg.n_datasets // 20)
        if max(win_counts.values()) > win_cap:
            continue
        if win_counts.get(model_ids[int(np.argmin(mean_clean))], 0) > cluster_sizes.max():
            continue
        return base, aff, scores
    raise ConfigError(
        f"no admissible planted structure after {MAX_REJECTION_ATTEMPTS} attempts; "
        "relax n_clusters/noise_sigma"
    )


def _make_cards(cfg: SynthConfig, model_ids: list[str], base: np.ndarray) -> list[ModelCard]:
    rng = derive_rng(cfg.seed, TAG_SYNTH, 3)
    cards = []
    quality = (BASE_HI - base) / (BASE_HI - BASE_LO)  # 1 = strongest model
    for i, mid in enumerate(model_ids):
        arch = "unet" if rng.random() < 0.5 else "dit"
        hp: dict = {
            "arch": arch,
            "act": str(rng.choice(["gelu", "silu", "relu"])),
            "train_steps": int(round(2e4 + 6e4 * quality[i] + rng.normal(0, 1.2e4))),
            "base_lr": float(10 ** rng.uniform(-4.5, -3.5)),
            "dropout": float(rng.choice([0.0, 0.1, 0.2])),
        }
        if arch == "unet":
            hp["channel_mult"] = int(rng.choice([1, 2, 4]))
        else:
            hp["patch_size"] = int(rng.choice([2, 4, 8]))
        cards.append(
            ModelCard(
                model_id=mid,
                hyperparams=hp,
                throughput_flops=float(1e12 * np.exp(rng.normal(0.0, 0.4))),
                num_params=float(1e8 * (0.8 + quality[i] + 0.35 * rng.standard_normal())),
            )
        )
    return cards


def generate_benchmark(cfg: SynthConfig) -> SynthBenchmark:
    model_ids = [f"m{i:02d}" for i in range(cfg.n_models)]
    dataset_ids = [f"d{i:02d}" for i in range(cfg.n_datasets)]
    cluster_of = {d: i % cfg.n_clusters for i, d in enumerate(dataset_ids)}

    rng = derive_rng(cfg.seed, TAG_SYNTH, 0)
    # Centers sit closer together than the per-dataset jitter, so the mean
    # features overlap across clusters and the covariance profiles (seen by
    # the pairwise Gaussian distance, not by raw features) carry the
    # cluster identity.
    centers = rng.normal(
        0.0, CENTER_SCALE * cfg.cluster_spread, size=(cfg.n_clusters, cfg.emb_dim)
    )
    log_var = rng.uniform(np.log(0.2), np.log(3.0), size=(cfg.n_clusters, cfg.emb_dim))
    cluster_std = np.exp(0.5 * log_var)

    dataset_stats: dict[str, EmbeddingStats] = {}
    for d in dataset_ids:
        k = cluster_of[d]
        jitter = rng.normal(0.0, cfg.cluster_spread, size=cfg.emb_dim)
        rows = centers[k] + jitter + rng.standard_normal(
            (cfg.rows_per_dataset, cfg.emb_dim)
        ) * cluster_std[k]
        dataset_stats[d] = accumulate_stats(rows, shrinkage_on=True, probe_id=PROBE_ID)

    base, _aff, scores = _plant_scores(cfg, model_ids, cluster_of)

    rng_init = derive_rng(cfg.seed, TAG_SYNTH, 4)
    # offset gaps exceed any possible score spread, so the pre-fine-tuning
    # ordering is exactly the shuffled offset permutation and carries no
    # quality signal beyond its single lottery pick
    gaps = rng_init.uniform(
        INITIAL_OFFSET_GAP_LO, INITIAL_OFFSET_GAP_HI, size=cfg.n_models
    )
    offsets = INITIAL_OFFSET_LO + np.cumsum(gaps)
    rng_init.shuffle(offsets)
    initial = {
        (m, d): float(scores[(m, d)] + offsets[i])
        for i, m in enumerate(model_ids)
        for d in dataset_ids
    }

    cards = _make_cards(cfg, model_ids, base)
    perf = PerfTable(scores=scores, initial=initial)
    return SynthBenchmark(
        cards=cards, dataset_stats=dataset_stats, perf=perf, cluster_of=cluster_of
    )


def save_benchmark(bench: SynthBenchmark, out_dir: str | Path) -> None:
    """Layout: zoo/<model>.json, datasets/<dataset>/ stats dirs, perf.csv,
    initial.csv, clusters.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    zoo = out / "zoo"
    zoo.mkdir(exist_ok=True)
    for card in bench.cards:
        save_model_card(card, zoo / f"{card.model_id}.json")
    ds_dir = out / "datasets"
    ds_dir.mkdir(exist_ok=True)
    for d, stats in sorted(bench.dataset_stats.items()):
        save_stats(stats, ds_dir / d)
    save_perf_csv(
        bench.perf,
        out / "perf.csv",
        out / "initial.csv" if bench.perf.initial is not None else None,
    )
    write_json_atomic(out / "clusters.json", bench.cluster_of)


def load_benchmark(bench_dir: str | Path) -> SynthBenchmark:
    bench = Path(bench_dir)
    cards = load_zoo(bench / "zoo")
    dataset_stats = {
        p.name: load_stats(p) for p in sorted((bench / "datasets").iterdir()) if p.is_dir()
    }
    initial_path = bench / "initial.csv"
    perf = load_perf_csv(
        bench / "perf.csv", initial_path if initial_path.exists() else None
    )
    clusters_path = bench / "clusters.json"
    cluster_of = (
        {str(k): int(v) for k, v in read_json(clusters_path).items()}
        if clusters_path.exists()
        else {}
    )
    return SynthBenchmark(
        cards=cards, dataset_stats=dataset_stats, perf=perf, cluster_of=cluster_of
    )
