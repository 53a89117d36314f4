"""Folder-to-embeddings extraction.

extract() walks an image folder in sorted path order, embeds every readable
image with the requested probe, and writes three artifacts under the output
directory: rows.f32 + rows_meta.json (the raw n x d float32 matrix),
stats/ (the Gaussian summary produced by the zoomatch accumulation rule, so
it loads through that package's stats loader bit for bit), and
extraction.json (a job summary counting skipped files). Unreadable files
are skipped with a warning; a run with no usable images is an error.

Stats are accumulated from the float32-truncated rows, so the stored matrix
and the stored summary describe exactly the same sample.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from zoomatch.errors import EstimationError
from zoomatch.stats import accumulate_stats, save_rows, save_stats

from .errors import ConfigError, DataError
from .probes import get_probe

RESIZE_MIN = 16


@dataclass(frozen=True)
class ExtractionJob:
    """One extraction request.

    input_dir: folder searched recursively for images.
    captions: optional captions file; recorded in the job summary, but text
        embedding is a reserved path and no caption vectors are produced.
    probe_id: which registered probe embeds the images.
    resize: square resolution images are center-cropped and resized to
        before encoding.
    batch_size: how many decoded images are held and embedded at once.
    """

    input_dir: Path
    captions: Path | None = None
    probe_id: str = "pixel-probe-v1"
    resize: int = 512
    batch_size: int = 16

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        if self.captions is not None:
            object.__setattr__(self, "captions", Path(self.captions))
        if self.resize < RESIZE_MIN:
            raise ConfigError(f"resize must be >= {RESIZE_MIN}, got {self.resize}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ExtractionResult:
    out_dir: Path
    n_rows: int
    dim: int
    skipped: tuple[str, ...]


def _embed_folder(job: ExtractionJob, probe) -> tuple[np.ndarray, list[str], str]:
    files = sorted(
        (p for p in job.input_dir.rglob("*") if p.is_file()),
        key=lambda p: p.relative_to(job.input_dir).as_posix(),
    )
    if not files:
        raise DataError(f"no files under {job.input_dir}")
    chunks: list[np.ndarray] = []
    pending: list[Image.Image] = []
    skipped: list[str] = []
    digest = hashlib.sha256()
    for path in files:
        try:
            with Image.open(path) as img:
                img.load()
        except (UnidentifiedImageError, OSError) as exc:
            warnings.warn(f"skipping unreadable image {path.name}: {exc}")
            skipped.append(path.relative_to(job.input_dir).as_posix())
            continue
        pending.append(img)
        digest.update(hashlib.sha256(path.read_bytes()).digest())
        if len(pending) == job.batch_size:
            chunks.append(probe.embed_batch(pending, job.resize))
            pending = []
    if pending:
        chunks.append(probe.embed_batch(pending, job.resize))
    if not chunks:
        raise DataError(f"no usable images under {job.input_dir}")
    return np.concatenate(chunks, axis=0), skipped, digest.hexdigest()


def extract(job: ExtractionJob, out_dir: str | Path) -> ExtractionResult:
    probe = get_probe(job.probe_id)
    if not job.input_dir.is_dir():
        raise DataError(f"input directory {job.input_dir} does not exist")
    if job.captions is not None:
        if not job.captions.is_file():
            raise DataError(f"captions file {job.captions} does not exist")
        warnings.warn(
            "captions recorded in the job summary but not embedded; "
            "caption probes are a reserved path"
        )
    rows, skipped, source_hash = _embed_folder(job, probe)
    try:
        stats = accumulate_stats(rows, shrinkage_on=True, probe_id=job.probe_id)
    except EstimationError as exc:
        raise DataError(
            f"need at least 2 usable images to estimate covariance: {exc}"
        ) from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_rows(rows, out, probe_id=job.probe_id, source_hash=source_hash)
    save_stats(stats, out / "stats")
    summary = {
        "probe_id": job.probe_id,
        "resize": job.resize,
        "batch_size": job.batch_size,
        "n_images": int(rows.shape[0]),
        "n_skipped": len(skipped),
        "skipped": skipped,
        "captions": None if job.captions is None else str(job.captions),
    }
    (out / "extraction.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return ExtractionResult(
        out_dir=out, n_rows=int(rows.shape[0]), dim=int(rows.shape[1]),
        skipped=tuple(skipped),
    )
