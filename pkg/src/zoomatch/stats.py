"""Gaussian embedding statistics: estimation and the on-disk container.

An :class:`EmbeddingStats` is the (mean, covariance, count) summary of a
sample of image embeddings produced by one probe model. It is the atomic
input of every distance computation in the package.

Container layout (one directory per stats object)::

    meta.json   {"dim": d, "count": n, "probe_id": ..., "dtype": "f32le",
                 "format_version": 1}
    mean.f32    d little-endian float32
    cov.f32     d*d little-endian float32, row-major

Payloads are stored in 32-bit floats; all computation runs in 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EstimationError, FormatError, InputError
from .ioutil import read_json, write_bytes_atomic, write_json_atomic

FORMAT_VERSION = 1
DTYPE_TAG = "f32le"

# Covariance shrinkage scale: cov += (SHRINKAGE_SCALE * trace/d) * I.
SHRINKAGE_SCALE = 1e-6


@dataclass(frozen=True)
class EmbeddingStats:
    """Gaussian summary of an embedded sample.

    dim: embedding dimensionality d.
    count: number of embedded samples the summary was estimated from (>= 2
        when estimated from data).
    mean: length-d vector.
    cov: d x d covariance matrix, symmetric within 1e-9 per entry.
    probe_id: identifier of the embedding model that produced the samples;
        distances are only meaningful between stats sharing a probe.
    """

    dim: int
    count: int
    mean: np.ndarray
    cov: np.ndarray
    probe_id: str

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.shape != (self.dim,):
            raise InputError(f"mean shape {mean.shape} does not match dim {self.dim}")
        if cov.shape != (self.dim, self.dim):
            raise InputError(f"cov shape {cov.shape} does not match dim {self.dim}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise InputError("non-finite entries in stats")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-9:
            raise InputError("cov is not symmetric within 1e-9")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def allclose(self, other: "EmbeddingStats", rtol: float = 0.0, atol: float = 0.0) -> bool:
        return (
            self.dim == other.dim
            and self.count == other.count
            and self.probe_id == other.probe_id
            and np.allclose(self.mean, other.mean, rtol=rtol, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=rtol, atol=atol)
        )


def accumulate_stats(rows: np.ndarray, shrinkage_on: bool, probe_id: str = "") -> EmbeddingStats:
    """Estimate EmbeddingStats from an n x d sample matrix.

    Mean is the column mean; covariance is the unbiased (n-1) sample
    covariance. With ``shrinkage_on``, cov += delta*I with
    delta = 1e-6 * trace(cov)/d, which guards the later matrix square root
    when n < d.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise InputError(f"rows must be a 2-d matrix, got shape {rows.shape}")
    n, d = rows.shape
    if n < 2:
        raise EstimationError(f"need at least 2 rows to estimate covariance, got {n}")
    if not np.all(np.isfinite(rows)):
        raise InputError("non-finite entry in rows")
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    if shrinkage_on:
        delta = SHRINKAGE_SCALE * float(np.trace(cov)) / d
        cov = cov + delta * np.eye(d)
    return EmbeddingStats(dim=d, count=n, mean=mean, cov=cov, probe_id=probe_id)


def save_stats(stats: EmbeddingStats, path: str | Path) -> None:
    """Write the stats container directory (payloads truncated to float32)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "dim": stats.dim,
        "count": stats.count,
        "probe_id": stats.probe_id,
        "dtype": DTYPE_TAG,
        "format_version": FORMAT_VERSION,
    }
    write_json_atomic(path / "meta.json", meta)
    write_bytes_atomic(path / "mean.f32", stats.mean.astype("<f4").tobytes())
    write_bytes_atomic(path / "cov.f32", np.ascontiguousarray(stats.cov).astype("<f4").tobytes())


def load_stats(path: str | Path) -> EmbeddingStats:
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise FormatError(f"missing meta.json under {path}")
    try:
        meta = read_json(meta_path)
    except ValueError as exc:
        raise FormatError(f"unparsable meta.json under {path}: {exc}") from exc
    for key in ("dim", "count", "probe_id", "dtype", "format_version"):
        if key not in meta:
            raise FormatError(f"meta.json missing key {key!r}")
    if meta["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {meta['format_version']!r}")
    if meta["dtype"] != DTYPE_TAG:
        raise FormatError(f"unsupported dtype {meta['dtype']!r}")
    dim = meta["dim"]
    count = meta["count"]
    if not isinstance(dim, int) or dim < 1 or not isinstance(count, int) or count < 1:
        raise FormatError(f"bad dim/count in meta.json: {dim!r}/{count!r}")
    mean = _read_f32(path / "mean.f32", dim, "mean")
    cov = _read_f32(path / "cov.f32", dim * dim, "cov").reshape(dim, dim)
    try:
        return EmbeddingStats(dim=dim, count=count, mean=mean, cov=cov, probe_id=meta["probe_id"])
    except InputError as exc:
        raise FormatError(f"invalid payload under {path}: {exc}") from exc


def _read_f32(path: Path, expected: int, label: str) -> np.ndarray:
    if not path.is_file():
        raise FormatError(f"missing {path.name}")
    raw = path.read_bytes()
    if len(raw) != 4 * expected:
        raise FormatError(
            f"{label} payload holds {len(raw) // 4} floats, manifest implies {expected}"
        )
    return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def save_rows(rows: np.ndarray, path: str | Path, probe_id: str, source_hash: str = "") -> None:
    """Write a raw embedding matrix: rows.f32 (n x d, little-endian float32)
    plus rows_meta.json (keys: n, dim, probe_id, source_hash)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise InputError(f"rows must be a 2-d matrix, got shape {rows.shape}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    n, d = rows.shape
    write_json_atomic(
        path / "rows_meta.json",
        {"n": n, "dim": d, "probe_id": probe_id, "source_hash": source_hash},
    )
    write_bytes_atomic(path / "rows.f32", np.ascontiguousarray(rows).astype("<f4").tobytes())


def load_rows(path: str | Path) -> tuple[np.ndarray, dict]:
    """Read a raw embedding matrix directory; returns (n x d float64, meta)."""
    path = Path(path)
    meta_path = path / "rows_meta.json"
    if not meta_path.is_file():
        raise FormatError(f"missing rows_meta.json under {path}")
    try:
        meta = read_json(meta_path)
    except ValueError as exc:
        raise FormatError(f"unparsable rows_meta.json under {path}: {exc}") from exc
    for key in ("n", "dim", "probe_id"):
        if key not in meta:
            raise FormatError(f"rows_meta.json missing key {key!r}")
    n, dim = meta["n"], meta["dim"]
    if not isinstance(n, int) or n < 1 or not isinstance(dim, int) or dim < 1:
        raise FormatError(f"bad n/dim in rows_meta.json: {n!r}/{dim!r}")
    flat = _read_f32(path / "rows.f32", n * dim, "rows")
    return flat.reshape(n, dim), meta
