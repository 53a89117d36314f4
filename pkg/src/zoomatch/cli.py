"""Command-line entry point.

Subcommands: synth (generate a planted benchmark), graph (build and
serialize the matching graph), train (fit schema/embeddings/ranker and
persist them), predict (rank the zoo for a query dataset's stats), eval
loo|sparsity|ablation (evaluation reports), stats (accumulate an embedding
matrix into a stats directory).

Exit codes: 0 success, 1 usage, 2 data/format, 3 numeric. Errors print to
stderr with a machine-parsable error_code= prefix. Every subcommand takes a
mandatory non-negative --seed; identical inputs and seed reproduce outputs
byte for byte. Pipeline hyperparameters come from an optional JSON config
file; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Mapping
from pathlib import Path

from .errors import DataError, FormatError, NumericError, ZoomatchError
from .features import load_schema, load_zoo, save_schema
from .gbdt import load_gbdt, save_gbdt
from .graph import build_graph, load_graph, save_graph
from .harness import (
    MODES,
    PipelineConfig,
    predict_query,
    run_loo,
    run_sparsity,
    save_report,
    train_pipeline,
)
from .ioutil import read_json, write_json_atomic, write_text_atomic
from .stats import accumulate_stats, load_rows, load_stats, save_stats
from .synth import SynthConfig, generate_benchmark, load_benchmark, save_benchmark
from .walks import load_embeddings, save_embeddings


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error_code=usage: {message}", file=sys.stderr)
        raise SystemExit(1)


def _seed_type(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {value}")
    return value


def _fraction_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _seed_list(text: str) -> list[int]:
    try:
        return [_seed_type(x) for x in text.split(",") if x.strip() != ""]
    except argparse.ArgumentTypeError:
        raise
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated seeds, got {text!r}")


_PIPELINE_FLAGS = (
    ("p", float),
    ("q", float),
    ("walk_length", int),
    ("walks_per_vertex", int),
    ("emb_dim", int),
    ("window", int),
    ("negatives", int),
    ("sgns_epochs", int),
    ("sgns_lr", float),
    ("rounds", int),
    ("depth", int),
    ("gbdt_lr", float),
)


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file of pipeline hyperparameters; flags override it")
    for name, typ in _PIPELINE_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None,
                       help=f"pipeline hyperparameter {name}")


def _resolve_config(
    args: argparse.Namespace, artifact: Mapping | None = None
) -> PipelineConfig:
    base: dict = dict(artifact) if artifact else {}
    if args.config is not None:
        loaded = read_json(args.config)
        if not isinstance(loaded, dict):
            raise FormatError(f"pipeline config {args.config} must be a JSON object")
        base.update(loaded)
    for name, _ in _PIPELINE_FLAGS:
        value = getattr(args, name)
        if value is not None:
            base[name] = value
    base["seed"] = args.seed
    return PipelineConfig.from_json_dict(base)


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed_type, required=True,
                   help="non-negative base seed; all randomness derives from it")


def build_parser() -> _Parser:
    parser = _Parser(prog="zoomatch",
                     description="Model-zoo selection via graph walks over matching graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a planted synthetic benchmark")
    p.add_argument("--models", type=int, default=10, help="zoo size M")
    p.add_argument("--datasets", type=int, default=32, help="dataset count D")
    p.add_argument("--clusters", type=int, default=4, help="planted cluster count K")
    p.add_argument("--emb-dim", type=int, default=16, help="embedding dimension")
    p.add_argument("--cluster-spread", type=float, default=0.1,
                   help="within-cluster mean jitter")
    p.add_argument("--noise-sigma", type=float, default=0.2, help="score noise")
    p.add_argument("--rows-per-dataset", type=int, default=192,
                   help="sampled embedding rows per dataset")
    p.add_argument("--out", type=Path, required=True, help="output benchmark directory")
    _add_seed(p)

    p = sub.add_parser("graph", help="build and serialize the matching graph")
    p.add_argument("--bench", type=Path, required=True, help="benchmark directory")
    p.add_argument("--out", type=Path, required=True, help="output graph JSON path")
    _add_seed(p)

    p = sub.add_parser("train", help="fit schema, embeddings, and ranker; persist artifacts")
    p.add_argument("--bench", type=Path, required=True, help="benchmark directory")
    p.add_argument("--out", type=Path, required=True, help="artifact output directory")
    _add_seed(p)
    _add_pipeline_flags(p)

    p = sub.add_parser("predict", help="rank the zoo for a query dataset's stats")
    p.add_argument("--graph", type=Path, required=True, help="graph JSON from train")
    p.add_argument("--ranker", type=Path, required=True,
                   help="ranker JSON from train; a config.json beside it supplies "
                        "pipeline defaults")
    p.add_argument("--schema", type=Path, required=True, help="schema JSON from train")
    p.add_argument("--zoo", type=Path, required=True, help="model card directory")
    p.add_argument("--datasets", type=Path, required=True,
                   help="directory of per-dataset stats directories")
    p.add_argument("--query", type=Path, required=True, help="query stats directory")
    p.add_argument("--query-id", type=str, default=None,
                   help="id for the query dataset (default: stats directory name)")
    _add_seed(p)
    _add_pipeline_flags(p)

    p = sub.add_parser("eval", help="evaluation experiments")
    esub = p.add_subparsers(dest="eval_command", required=True)

    e = esub.add_parser("loo", help="leave-one-out evaluation report")
    e.add_argument("--bench", type=Path, required=True, help="benchmark directory")
    e.add_argument("--out", type=Path, required=True, help="report output directory")
    e.add_argument("--mode", choices=MODES, default="both", help="input ablation mode")
    e.add_argument("--sparsity-fraction", type=float, default=0.0,
                   help="performance edges dropped inside each fold")
    e.add_argument("--no-baselines", action="store_true",
                   help="skip baseline selectors in the report")
    _add_seed(e)
    _add_pipeline_flags(e)

    e = esub.add_parser("sparsity", help="OSR vs. dropped-edge fraction")
    e.add_argument("--bench", type=Path, required=True, help="benchmark directory")
    e.add_argument("--out", type=Path, required=True, help="output directory")
    e.add_argument("--fractions", type=_fraction_list, default=[0.0, 0.2, 0.4, 0.6],
                   help="comma-separated drop fractions")
    e.add_argument("--seeds", type=_seed_list, default=None,
                   help="comma-separated run seeds (default: just --seed)")
    _add_seed(e)
    _add_pipeline_flags(e)

    e = esub.add_parser("ablation", help="input-ablation evaluation report")
    e.add_argument("--bench", type=Path, required=True, help="benchmark directory")
    e.add_argument("--out", type=Path, required=True, help="report output directory")
    e.add_argument("--mode", choices=MODES, required=True, help="input ablation mode")
    _add_seed(e)
    _add_pipeline_flags(e)

    p = sub.add_parser("stats", help="accumulate embedding rows into a stats directory")
    p.add_argument("--rows", type=Path, required=True,
                   help="directory holding rows.f32 and rows_meta.json")
    p.add_argument("--out", type=Path, required=True, help="output stats directory")
    p.add_argument("--no-shrinkage", action="store_true",
                   help="skip the diagonal covariance shrinkage")
    _add_seed(p)

    return parser


def _cmd_synth(args: argparse.Namespace) -> int:
    cfg = SynthConfig(
        n_models=args.models,
        n_datasets=args.datasets,
        n_clusters=args.clusters,
        emb_dim=args.emb_dim,
        cluster_spread=args.cluster_spread,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        rows_per_dataset=args.rows_per_dataset,
    )
    save_benchmark(generate_benchmark(cfg), args.out)
    return 0


def _cmd_graph(args: argparse.Namespace) -> int:
    bench = load_benchmark(args.bench)
    g = build_graph(bench.perf, bench.dataset_stats, bench.model_ids)
    save_graph(g, args.out)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    bench = load_benchmark(args.bench)
    cfg = _resolve_config(args)
    pipe = train_pipeline(bench.cards, bench.dataset_stats, bench.perf, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_graph(pipe.graph, out / "graph.json")
    save_schema(pipe.schema, out / "schema.json")
    save_gbdt(pipe.ranker, out / "ranker.json")
    save_embeddings(pipe.embeddings, out / "embeddings.json")
    write_json_atomic(out / "config.json", cfg.to_json_dict())
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    g = load_graph(args.graph)
    ranker = load_gbdt(args.ranker)
    schema = load_schema(args.schema)
    zoo = load_zoo(args.zoo)
    datasets = {
        p.name: load_stats(p) for p in sorted(Path(args.datasets).iterdir()) if p.is_dir()
    }
    query_stats = load_stats(args.query)
    query_id = args.query_id or Path(args.query).name
    # the ranker only accepts rows of its training width, so the config
    # persisted beside it is the right default; --config/flags still win
    saved = Path(args.ranker).parent / "config.json"
    artifact = read_json(saved) if saved.is_file() else None
    if artifact is not None and not isinstance(artifact, dict):
        raise FormatError(f"pipeline config {saved} must be a JSON object")
    cfg = _resolve_config(args, artifact)
    triples = predict_query(g, zoo, datasets, query_id, query_stats, schema, ranker, cfg)
    print("rank,model_id,expected_rank")
    for rank, model_id, expected in triples:
        print(f"{rank},{model_id},{expected!r}")
    return 0


def _cmd_eval_loo(args: argparse.Namespace) -> int:
    bench = load_benchmark(args.bench)
    cfg = _resolve_config(args)
    report = run_loo(
        bench.cards,
        bench.dataset_stats,
        bench.perf,
        cfg,
        mode=args.mode,
        sparsity_fraction=args.sparsity_fraction,
        compute_baselines=not args.no_baselines,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_report(report, out / "report.json", out / "report.csv")
    return 0


def _cmd_eval_sparsity(args: argparse.Namespace) -> int:
    bench = load_benchmark(args.bench)
    cfg = _resolve_config(args)
    seeds = args.seeds if args.seeds else [args.seed]
    result = run_sparsity(
        bench.cards, bench.dataset_stats, bench.perf, cfg, args.fractions, seeds
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json_atomic(out / "sparsity.json", result.to_json_dict())
    write_text_atomic(out / "sparsity.tsv", result.to_tsv())
    return 0


def _cmd_eval_ablation(args: argparse.Namespace) -> int:
    bench = load_benchmark(args.bench)
    cfg = _resolve_config(args)
    report = run_loo(
        bench.cards, bench.dataset_stats, bench.perf, cfg,
        mode=args.mode, compute_baselines=False,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_report(report, out / "report.json", out / "report.csv")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    rows, meta = load_rows(args.rows)
    stats = accumulate_stats(
        rows, shrinkage_on=not args.no_shrinkage, probe_id=str(meta.get("probe_id", ""))
    )
    save_stats(stats, args.out)
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "graph": _cmd_graph,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "stats": _cmd_stats,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "eval":
            handler = {
                "loo": _cmd_eval_loo,
                "sparsity": _cmd_eval_sparsity,
                "ablation": _cmd_eval_ablation,
            }[args.eval_command]
        else:
            handler = _HANDLERS[args.command]
        return handler(args)
    except NumericError as e:
        print(f"error_code=numeric: {e}", file=sys.stderr)
        return 3
    except FormatError as e:
        print(f"error_code=format: {e}", file=sys.stderr)
        return 2
    except (DataError, ZoomatchError) as e:
        print(f"error_code=data: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error_code=data: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
