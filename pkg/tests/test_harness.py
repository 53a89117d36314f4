import numpy as np
import pytest

from zoomatch.errors import ConfigError, DataError
from zoomatch.harness import (
    EvalReport,
    PipelineConfig,
    SparsityResult,
    predict_query,
    run_ablation,
    run_loo,
    run_sparsity,
    train_pipeline,
)
from zoomatch.perf import PerfTable
from zoomatch.synth import SynthConfig, generate_benchmark

BENCH = generate_benchmark(SynthConfig(n_models=4, n_datasets=8, n_clusters=2,
                                       emb_dim=4, rows_per_dataset=24, seed=0))
CFG = PipelineConfig(walk_length=10, walks_per_vertex=3, emb_dim=8, window=2,
                     negatives=2, sgns_epochs=1, rounds=15, depth=2, seed=0)


def loo(**kw):
    return run_loo(BENCH.cards, BENCH.dataset_stats, BENCH.perf, CFG, **kw)


@pytest.fixture(scope="module")
def report():
    return loo()


def test_report_shape(report):
    assert set(report.per_dataset) == set(BENCH.perf.dataset_ids())
    for fold in report.per_dataset.values():
        assert sorted(fold.predicted_order) == sorted(BENCH.perf.model_ids())
        assert fold.selected == fold.predicted_order[0]
        assert -1.0 <= fold.tau_w <= 1.0
    assert 0.0 <= report.aggregates["osr"] <= 1.0
    assert report.aggregates["o2o"] >= 0.0
    assert report.aggregates["o2b"] <= report.aggregates["o2o"]


def test_deterministic_reports(report):
    again = loo()
    assert again.to_json() == report.to_json()


def test_leakage_diagnostics(report):
    assert report.diagnostics["leakage_checks"] == len(BENCH.perf.dataset_ids())
    assert report.diagnostics["gbdt_max_loss_increase"] <= 1e-9


def test_config_echo(report):
    assert report.config["seed"] == 0
    assert report.config["mode"] == "both"
    assert report.config["sparsity_fraction"] == 0.0


def test_csv_format(report):
    lines = report.to_csv().strip().split("\n")
    assert lines[0] == "dataset,selected,true_best,tau_w"
    body = [l for l in lines[1:] if not l.startswith("#")]
    footer = [l for l in lines[1:] if l.startswith("#")]
    assert len(body) == len(BENCH.perf.dataset_ids())
    for line in body:
        assert len(line.split(",")) == 4
    assert any("osr=" in l for l in footer)


def test_baselines_present(report):
    assert set(report.baselines) == {"overall", "initial", "direct"}
    for agg in report.baselines.values():
        assert 0.0 <= agg["osr"] <= 1.0


def test_ablation_both_equals_loo(report):
    rep = run_ablation("both", BENCH.cards, BENCH.dataset_stats, BENCH.perf, CFG)
    assert rep.aggregates == report.aggregates
    assert {d: f.selected for d, f in rep.per_dataset.items()} == {
        d: f.selected for d, f in report.per_dataset.items()}


def test_ablation_modes_run():
    for mode in ("features_only", "graph_only"):
        rep = loo(mode=mode, compute_baselines=False)
        assert rep.config["mode"] == mode
        assert 0.0 <= rep.aggregates["osr"] <= 1.0


def test_invalid_mode_rejected():
    with pytest.raises(ConfigError):
        loo(mode="bogus")


def test_incomplete_perf_rejected():
    scores = dict(BENCH.perf.scores)
    scores.pop(sorted(scores)[0])
    with pytest.raises(DataError):
        run_loo(BENCH.cards, BENCH.dataset_stats, PerfTable(scores=scores, initial=None), CFG)


def test_full_sparsity_hits_floor():
    rep = loo(sparsity_fraction=1.0, compute_baselines=False)
    first = sorted(BENCH.perf.model_ids())[0]
    assert all(f.selected == first for f in rep.per_dataset.values())
    from zoomatch.metrics import true_best
    expect = np.mean([true_best(BENCH.perf, d) == first for d in BENCH.perf.dataset_ids()])
    assert rep.aggregates["osr"] == pytest.approx(float(expect))


def test_sparsity_zero_matches_loo(report):
    res = run_sparsity(BENCH.cards, BENCH.dataset_stats, BENCH.perf, CFG,
                       fractions=[0.0], seeds=[0])
    assert res.mean_osr(0.0) == report.aggregates["osr"]


def test_sparsity_result_table():
    res = run_sparsity(BENCH.cards, BENCH.dataset_stats, BENCH.perf, CFG,
                       fractions=[0.0, 0.5], seeds=[0, 1])
    tsv = res.to_tsv().strip().split("\n")
    assert tsv[0] == "fraction\tmean_osr\tstddev"
    assert len(tsv) == 3
    for frac in (0.0, 0.5):
        vals = res.osr[frac]
        assert len(vals) == 2
        assert res.stddev(frac) == pytest.approx(float(np.std(vals, ddof=1)))
    d = res.to_json_dict()
    assert len(d["cells"]) == 4
    assert [row["fraction"] for row in d["summary"]] == [0.0, 0.5]


def test_pipeline_config_roundtrip():
    cfg = PipelineConfig(p=2.0, q=0.5, rounds=7, seed=3)
    back = PipelineConfig.from_json_dict(cfg.to_json_dict())
    assert back == cfg
    with pytest.raises(ConfigError):
        PipelineConfig.from_json_dict({"seed": 0, "bogus_key": 1})
    with pytest.raises(ConfigError):
        PipelineConfig(p=-1.0)
    with pytest.raises(ConfigError):
        PipelineConfig(seed=-1)


def test_train_and_predict_query():
    held = sorted(BENCH.perf.dataset_ids())[0]
    train_perf = BENCH.perf.without_dataset(held)
    train_stats = {d: s for d, s in BENCH.dataset_stats.items() if d != held}
    pipe = train_pipeline(BENCH.cards, train_stats, train_perf, CFG)
    rows = predict_query(pipe.graph, BENCH.cards, train_stats, held,
                         BENCH.dataset_stats[held], pipe.schema, pipe.ranker, CFG)
    assert [r[0] for r in rows] == list(range(1, 5))
    assert sorted(r[1] for r in rows) == sorted(BENCH.perf.model_ids())
    ers = [r[2] for r in rows]
    assert ers == sorted(ers)
    again = predict_query(pipe.graph, BENCH.cards, train_stats, held,
                          BENCH.dataset_stats[held], pipe.schema, pipe.ranker, CFG)
    assert rows == again
