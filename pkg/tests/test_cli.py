import json
import subprocess
import sys

import numpy as np
import pytest

from zoomatch.stats import load_stats, save_rows

SYNTH_ARGS = ["--models", "4", "--datasets", "8", "--clusters", "2", "--emb-dim", "4",
              "--rows-per-dataset", "24", "--seed", "0"]
FAST_PIPE = ["--walk-length", "10", "--walks-per-vertex", "3", "--emb-dim", "8",
             "--window", "2", "--negatives", "2", "--sgns-epochs", "1",
             "--rounds", "15", "--depth", "2"]


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "zoomatch", *map(str, args)],
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "bench"
    res = run_cli("synth", *SYNTH_ARGS, "--out", out)
    assert res.returncode == 0, res.stderr
    return out


def test_help_exits_zero():
    res = run_cli("--help")
    assert res.returncode == 0
    assert "usage" in res.stdout.lower()


def test_usage_error_exit_one():
    res = run_cli("synth", "--out", "/tmp/x")  # missing required --seed
    assert res.returncode == 1
    assert "error_code=usage" in res.stderr


def test_negative_seed_usage_error(tmp_path):
    res = run_cli("synth", "--seed", "-3", "--out", tmp_path / "b")
    assert res.returncode == 1
    assert "error_code=usage" in res.stderr


def test_unknown_subcommand():
    res = run_cli("frobnicate")
    assert res.returncode == 1
    assert "error_code=usage" in res.stderr


def test_synth_writes_benchmark(bench_dir):
    assert (bench_dir / "perf.csv").exists()
    assert (bench_dir / "initial.csv").exists()
    assert sorted(p.name for p in (bench_dir / "zoo").glob("*.json"))
    assert (bench_dir / "datasets").is_dir()


def test_graph_command(bench_dir, tmp_path):
    out = tmp_path / "graph.json"
    res = run_cli("graph", "--bench", bench_dir, "--out", out, "--seed", "0")
    assert res.returncode == 0, res.stderr
    doc = json.loads(out.read_text())
    assert doc["tau"] > 0
    assert len(doc["vertices"]) == 12


def test_data_error_exit_two(tmp_path):
    res = run_cli("graph", "--bench", tmp_path / "missing", "--out",
                  tmp_path / "g.json", "--seed", "0")
    assert res.returncode == 2
    assert "error_code=data" in res.stderr


def test_format_error_exit_two(bench_dir, tmp_path):
    import shutil
    bad = tmp_path / "badbench"
    shutil.copytree(bench_dir, bad)
    (bad / "perf.csv").write_text("model_id,dataset_id,score\nm0,d0,notanumber\n")
    res = run_cli("graph", "--bench", bad, "--out", tmp_path / "g.json", "--seed", "0")
    assert res.returncode == 2
    assert "error_code=format" in res.stderr


def test_eval_loo_byte_identical(bench_dir, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        res = run_cli("eval", "loo", "--bench", bench_dir, "--out", out,
                      "--seed", "0", *FAST_PIPE)
        assert res.returncode == 0, res.stderr
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()
    assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()
    doc = json.loads((out_a / "report.json").read_text())
    assert "aggregates" in doc and "baselines" in doc


def test_eval_loo_csv_shape(bench_dir, tmp_path):
    out = tmp_path / "r"
    res = run_cli("eval", "loo", "--bench", bench_dir, "--out", out,
                  "--seed", "1", "--no-baselines", *FAST_PIPE)
    assert res.returncode == 0, res.stderr
    lines = (out / "report.csv").read_text().strip().split("\n")
    assert lines[0] == "dataset,selected,true_best,tau_w"


def test_train_then_predict(bench_dir, tmp_path):
    art = tmp_path / "artifacts"
    res = run_cli("train", "--bench", bench_dir, "--out", art, "--seed", "0", *FAST_PIPE)
    assert res.returncode == 0, res.stderr
    for name in ("graph.json", "schema.json", "ranker.json", "embeddings.json", "config.json"):
        assert (art / name).exists()
    query = sorted((bench_dir / "datasets").iterdir())[0]
    res = run_cli("predict", "--graph", art / "graph.json", "--ranker", art / "ranker.json",
                  "--schema", art / "schema.json", "--zoo", bench_dir / "zoo",
                  "--datasets", bench_dir / "datasets", "--query", query,
                  "--query-id", "queryd", "--seed", "0", *FAST_PIPE)
    assert res.returncode == 0, res.stderr
    lines = res.stdout.strip().split("\n")
    assert lines[0] == "rank,model_id,expected_rank"
    assert len(lines) == 5
    ranks = [int(l.split(",")[0]) for l in lines[1:]]
    assert ranks == [1, 2, 3, 4]


def test_predict_defaults_to_trained_config(bench_dir, tmp_path):
    art = tmp_path / "artifacts"
    res = run_cli("train", "--bench", bench_dir, "--out", art, "--seed", "0", *FAST_PIPE)
    assert res.returncode == 0, res.stderr
    query = sorted((bench_dir / "datasets").iterdir())[0]
    base = ["predict", "--graph", art / "graph.json", "--ranker", art / "ranker.json",
            "--schema", art / "schema.json", "--zoo", bench_dir / "zoo",
            "--datasets", bench_dir / "datasets", "--query", query,
            "--query-id", "queryd", "--seed", "0"]
    # without pipeline flags the config.json saved by train must apply,
    # otherwise the row width cannot match the persisted ranker
    bare = run_cli(*base)
    assert bare.returncode == 0, bare.stderr
    explicit = run_cli(*base, *FAST_PIPE)
    assert bare.stdout == explicit.stdout
    # an explicit flag still overrides the saved value, mismatch and all
    clash = run_cli(*base, "--emb-dim", "16")
    assert clash.returncode == 2
    assert "error_code=data" in clash.stderr


def test_eval_sparsity(bench_dir, tmp_path):
    out = tmp_path / "sp"
    res = run_cli("eval", "sparsity", "--bench", bench_dir, "--out", out,
                  "--fractions", "0.0,0.5", "--seeds", "0", "--seed", "0", *FAST_PIPE)
    assert res.returncode == 0, res.stderr
    tsv = (out / "sparsity.tsv").read_text().strip().split("\n")
    assert tsv[0] == "fraction\tmean_osr\tstddev"
    assert len(tsv) == 3
    doc = json.loads((out / "sparsity.json").read_text())
    assert len(doc["summary"]) == 2


def test_eval_ablation(bench_dir, tmp_path):
    out = tmp_path / "ab"
    res = run_cli("eval", "ablation", "--bench", bench_dir, "--out", out,
                  "--mode", "features_only", "--seed", "0", *FAST_PIPE)
    assert res.returncode == 0, res.stderr
    doc = json.loads((out / "report.json").read_text())
    assert doc["config"]["mode"] == "features_only"


def test_config_file_and_flag_override(bench_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"walk_length": 10, "walks_per_vertex": 3, "emb_dim": 8,
                               "window": 2, "negatives": 2, "sgns_epochs": 1,
                               "rounds": 15, "depth": 2}))
    out = tmp_path / "r"
    res = run_cli("eval", "loo", "--bench", bench_dir, "--out", out,
                  "--config", cfg, "--rounds", "10", "--seed", "2", "--no-baselines")
    assert res.returncode == 0, res.stderr
    doc = json.loads((out / "report.json").read_text())
    assert doc["config"]["rounds"] == 10  # flag wins over file
    assert doc["config"]["walk_length"] == 10
    assert doc["config"]["seed"] == 2


def test_stats_command(tmp_path):
    rows = np.random.default_rng(0).normal(size=(20, 3))
    save_rows(rows, tmp_path / "rows", probe_id="p")
    res = run_cli("stats", "--rows", tmp_path / "rows", "--out", tmp_path / "st",
                  "--seed", "0")
    assert res.returncode == 0, res.stderr
    s = load_stats(tmp_path / "st")
    assert s.dim == 3 and s.count == 20
    np_rows = rows.astype(np.float32).astype(np.float64)
    assert np.allclose(s.mean, np_rows.mean(axis=0), atol=1e-7)
