import subprocess
import sys


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "probe_extract", *map(str, args)],
                          capture_output=True, text=True)


def test_help_exits_zero():
    res = run_cli("--help")
    assert res.returncode == 0
    assert "--probe" in res.stdout and "--resize" in res.stdout


def test_missing_required_flag_is_usage_error(tmp_path):
    res = run_cli("--out", tmp_path / "emb")
    assert res.returncode == 1
    assert "error_code=usage" in res.stderr


def test_extract_success(image_dir, tmp_path):
    out = tmp_path / "emb"
    res = run_cli("--input", image_dir, "--out", out, "--resize", "64")
    assert res.returncode == 0, res.stderr
    assert "wrote 5 embeddings" in res.stdout
    assert (out / "rows.f32").is_file() and (out / "stats" / "meta.json").is_file()


def test_missing_input_dir_is_data_error(tmp_path):
    res = run_cli("--input", tmp_path / "nope", "--out", tmp_path / "emb")
    assert res.returncode == 2
    assert "error_code=data" in res.stderr


def test_unusable_folder_is_data_error(tmp_path):
    d = tmp_path / "junk"
    d.mkdir()
    (d / "x.png").write_bytes(b"junk")
    res = run_cli("--input", d, "--out", tmp_path / "emb")
    assert res.returncode == 2
    assert "error_code=data" in res.stderr


def test_unknown_probe_is_data_error(image_dir, tmp_path):
    res = run_cli("--input", image_dir, "--out", tmp_path / "emb",
                  "--probe", "clip-vit-b32")
    assert res.returncode == 2
    assert "error_code=data" in res.stderr and "unknown probe" in res.stderr


def test_double_run_byte_identical(image_dir, tmp_path):
    outs = (tmp_path / "e1", tmp_path / "e2")
    for out in outs:
        res = run_cli("--input", image_dir, "--out", out, "--resize", "64")
        assert res.returncode == 0, res.stderr
    for rel in ("rows.f32", "rows_meta.json", "stats/mean.f32", "stats/cov.f32"):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel
