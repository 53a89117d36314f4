import numpy as np

from zoomatch.stats import EmbeddingStats, accumulate_stats


def make_stats(seed: int, dim: int = 4, n: int = 64, probe_id: str = "probe") -> EmbeddingStats:
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, dim))
    return accumulate_stats(rows, shrinkage_on=True, probe_id=probe_id)


def random_spd(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim))
    return a.T @ a + 1e-3 * np.eye(dim)
