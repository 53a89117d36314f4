"""Model-zoo selection for fine-tuning targets.

Given embedding statistics of a target dataset and a zoo of pretrained
models with known fine-tuning scores on other datasets, predict which model
will fine-tune best: Gaussian (Frechet) distances build a heterogeneous
matching graph, biased random walks embed its edges, and a boosted-tree
classifier maps model/dataset/edge features to rank distributions.
"""

from .errors import (
    ConfigError,
    DataError,
    EstimationError,
    FormatError,
    InputError,
    NumericError,
    ZoomatchError,
)
from .features import (
    FeatureSchema,
    ModelCard,
    TrainingRow,
    assemble_row,
    dataset_feature,
    encode_model,
    fit_schema,
)
from .frechet import frechet_distance, sqrtm_spd
from .gbdt import (
    GbdtModel,
    make_rank_labels,
    predict_rank_scores,
    select_best,
    train_gbdt,
)
from .graph import (
    Edge,
    EdgeKind,
    MatchingGraph,
    VertexId,
    VertexKind,
    build_graph,
    dataset_vertex,
    drop_performance_edges,
    insert_query_dataset,
    model_vertex,
)
from .harness import (
    EvalReport,
    PipelineConfig,
    run_ablation,
    run_loo,
    run_sparsity,
    train_pipeline,
)
from .metrics import (
    metric_o2b,
    metric_o2o,
    metric_osr,
    metric_weighted_kendall,
)
from .perf import PerfTable, load_perf_csv, save_perf_csv
from .stats import EmbeddingStats, accumulate_stats, load_stats, save_stats
from .synth import SynthConfig, generate_benchmark
from .walks import (
    NodeEmbedding,
    WalkConfig,
    WalkSampler,
    edge_embedding,
    generate_walks,
    train_node_embeddings,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "Edge",
    "EdgeKind",
    "EmbeddingStats",
    "EstimationError",
    "EvalReport",
    "FeatureSchema",
    "FormatError",
    "GbdtModel",
    "InputError",
    "MatchingGraph",
    "ModelCard",
    "NodeEmbedding",
    "NumericError",
    "PerfTable",
    "PipelineConfig",
    "SynthConfig",
    "TrainingRow",
    "VertexId",
    "VertexKind",
    "WalkConfig",
    "WalkSampler",
    "ZoomatchError",
    "accumulate_stats",
    "assemble_row",
    "build_graph",
    "dataset_feature",
    "dataset_vertex",
    "drop_performance_edges",
    "edge_embedding",
    "encode_model",
    "fit_schema",
    "frechet_distance",
    "generate_benchmark",
    "generate_walks",
    "insert_query_dataset",
    "load_perf_csv",
    "load_stats",
    "make_rank_labels",
    "metric_o2b",
    "metric_o2o",
    "metric_osr",
    "metric_weighted_kendall",
    "model_vertex",
    "predict_rank_scores",
    "run_ablation",
    "run_loo",
    "run_sparsity",
    "save_perf_csv",
    "save_stats",
    "select_best",
    "sqrtm_spd",
    "train_gbdt",
    "train_node_embeddings",
    "train_pipeline",
]
