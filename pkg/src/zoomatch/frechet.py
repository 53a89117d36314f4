"""Frechet distance between Gaussian embedding summaries.

d_F(a, b) = sqrt( ||mu_a - mu_b||^2
                  + tr(S_a + S_b - 2 (S_a^{1/2} S_b S_a^{1/2})^{1/2}) )

The cross term uses the symmetric reformulation of (S_a S_b)^{1/2} so every
eigendecomposition runs on a symmetric matrix. The reported value is the
distance itself (FID convention), not its square.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, NumericError
from .stats import EmbeddingStats

# Round-off on near-identical distributions may push the trace argument
# slightly negative; anything in [-TRACE_CLAMP, 0) is clamped to 0.
TRACE_CLAMP = 1e-6

# Eigenvalues of a nominally-PSD matrix may dip below zero by round-off;
# tolerated down to -EIG_TOL * trace/d, clamped to 0 before sqrt.
EIG_TOL = 1e-8

SYMMETRY_TOL = 1e-8


def sqrtm_spd(S: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues below -1e-8*trace(S)/d raise; small negatives inside the
    tolerance are clamped to 0 before square-rooting. The result R is
    symmetric with R @ R ~= S (Frobenius error <= 1e-8 * (1 + ||S||_F)).
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"expected a square matrix, got shape {S.shape}")
    d = S.shape[0]
    scale = max(1.0, float(np.max(np.abs(S))))
    if float(np.max(np.abs(S - S.T), initial=0.0)) > SYMMETRY_TOL * scale:
        raise NumericError("matrix is not symmetric within tolerance")
    Ssym = (S + S.T) / 2.0
    try:
        w, V = np.linalg.eigh(Ssym)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    floor = -EIG_TOL * max(float(np.trace(Ssym)), 0.0) / d
    if w[0] < min(floor, -EIG_TOL):
        raise NumericError(f"eigenvalue {w[0]:.3e} below PSD tolerance {floor:.3e}")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.T
    return (R + R.T) / 2.0


def frechet_distance(a: EmbeddingStats, b: EmbeddingStats) -> float:
    """Frechet (2-Wasserstein) distance between two Gaussian summaries."""
    if a.dim != b.dim:
        raise InputError(f"dim mismatch: {a.dim} vs {b.dim}")
    if a.probe_id != b.probe_id:
        raise InputError(f"probe mismatch: {a.probe_id!r} vs {b.probe_id!r}")
    diff = a.mean - b.mean
    mean_term = float(diff @ diff)

    Ra = sqrtm_spd(a.cov)
    inner = Ra @ b.cov @ Ra
    cross = sqrtm_spd((inner + inner.T) / 2.0)
    trace_term = float(np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    if trace_term < 0.0:
        if trace_term < -TRACE_CLAMP:
            raise NumericError(f"trace term {trace_term:.3e} below clamp window")
        trace_term = 0.0
    return float(np.sqrt(mean_term + trace_term))
