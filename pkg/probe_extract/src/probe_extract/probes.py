"""Embedding probes.

The built-in probe is a pixel-statistics encoder: convert to RGB,
center-crop to a square, resize to the job resolution, then block-average
down to a fixed 16x16 grid per channel and scale to [0, 1]. It is exactly
deterministic, needs no weights, and stands in for heavyweight pretrained
encoders; a CLIP-family checkpoint would slot in behind the same interface
under its own probe id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConfigError

GRID = 16


@dataclass(frozen=True)
class PixelProbe:
    probe_id: str = "pixel-probe-v1"

    @property
    def dim(self) -> int:
        return GRID * GRID * 3

    def embed_image(self, image: Image.Image, resize: int) -> np.ndarray:
        img = image.convert("RGB")
        w, h = img.size
        side = min(w, h)
        left, top = (w - side) // 2, (h - side) // 2
        img = img.crop((left, top, left + side, top + side))
        img = img.resize((resize, resize), Image.Resampling.BICUBIC)
        # BOX resampling on the square image is an exact area average
        img = img.resize((GRID, GRID), Image.Resampling.BOX)
        arr = np.asarray(img, dtype=np.float64) / 255.0
        return arr.reshape(-1).astype(np.float32)

    def embed_batch(self, images: list[Image.Image], resize: int) -> np.ndarray:
        return np.stack([self.embed_image(img, resize) for img in images])


_PROBES = {"pixel-probe-v1": PixelProbe()}


def available_probes() -> list[str]:
    return sorted(_PROBES)


def get_probe(probe_id: str) -> PixelProbe:
    if probe_id not in _PROBES:
        raise ConfigError(
            f"unknown probe {probe_id!r}; available: {', '.join(available_probes())}"
        )
    return _PROBES[probe_id]


def embed_captions(probe_id: str, captions_path) -> np.ndarray:
    """Reserved text-probe path; the current probes embed images only."""
    raise NotImplementedError(
        f"caption embedding is reserved; probe {probe_id!r} embeds images only"
    )
