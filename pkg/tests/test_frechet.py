import numpy as np
import pytest

from support import random_spd
from zoomatch.errors import InputError, NumericError
from zoomatch.frechet import frechet_distance, sqrtm_spd
from zoomatch.stats import EmbeddingStats


def gauss(mean, cov, probe_id="p"):
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    return EmbeddingStats(dim=mean.size, count=100, mean=mean, cov=cov, probe_id=probe_id)


def diag_oracle(mu_a, la, mu_b, lb):
    mu_a, la, mu_b, lb = map(np.asarray, (mu_a, la, mu_b, lb))
    return float(np.sqrt(np.sum((mu_a - mu_b) ** 2) + np.sum((np.sqrt(la) - np.sqrt(lb)) ** 2)))


def test_sqrtm_identity():
    assert np.allclose(sqrtm_spd(np.eye(3)), np.eye(3))


def test_sqrtm_diagonal():
    assert np.allclose(sqrtm_spd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sqrtm_multiply_back(rng):
    s = random_spd(rng, 8)
    r = sqrtm_spd(s)
    assert np.linalg.norm(r @ r - s) <= 1e-8 * np.linalg.norm(s)


def test_sqrtm_rejects_asymmetric():
    m = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NumericError):
        sqrtm_spd(m)


def test_sqrtm_rejects_negative():
    with pytest.raises(NumericError):
        sqrtm_spd(np.diag([1.0, -1.0]))


def test_self_distance_zero(rng):
    a = gauss(rng.normal(size=5), random_spd(rng, 5))
    assert frechet_distance(a, a) <= 1e-6


def test_scalar_closed_form():
    a = gauss([0.0], [[1.0]])
    b = gauss([2.0], [[4.0]])
    assert abs(frechet_distance(a, b) - np.sqrt(5.0)) <= 1e-6


def test_diagonal_closed_form(rng):
    for _ in range(20):
        mu_a, mu_b = rng.normal(size=(2, 3))
        la, lb = rng.uniform(0.1, 5.0, size=(2, 3))
        d = frechet_distance(gauss(mu_a, np.diag(la)), gauss(mu_b, np.diag(lb)))
        oracle = diag_oracle(mu_a, la, mu_b, lb)
        assert abs(d - oracle) <= 1e-6 * max(1.0, oracle)


def test_symmetry(rng):
    for _ in range(100):
        dim = int(rng.integers(1, 33))
        a = gauss(rng.normal(size=dim), random_spd(rng, dim))
        b = gauss(rng.normal(size=dim), random_spd(rng, dim))
        dab = frechet_distance(a, b)
        dba = frechet_distance(b, a)
        assert abs(dab - dba) <= 1e-6 * (1.0 + dab)


def test_triangle_inequality(rng):
    for _ in range(60):
        dim = int(rng.integers(1, 9))
        pts = [gauss(rng.normal(size=dim), random_spd(rng, dim)) for _ in range(3)]
        dab = frechet_distance(pts[0], pts[1])
        dbc = frechet_distance(pts[1], pts[2])
        dac = frechet_distance(pts[0], pts[2])
        assert dac <= dab + dbc + 1e-5


def test_translation_covariance(rng):
    a = gauss(rng.normal(size=4), random_spd(rng, 4))
    b = gauss(rng.normal(size=4), random_spd(rng, 4))
    shift = rng.normal(size=4)
    a2 = gauss(a.mean + shift, a.cov)
    b2 = gauss(b.mean + shift, b.cov)
    assert abs(frechet_distance(a, b) - frechet_distance(a2, b2)) <= 1e-9 * (
        1.0 + frechet_distance(a, b))


def test_dim_mismatch():
    with pytest.raises(InputError):
        frechet_distance(gauss([0.0], [[1.0]]), gauss([0.0, 0.0], np.eye(2)))


def test_probe_mismatch():
    with pytest.raises(InputError):
        frechet_distance(gauss([0.0], [[1.0]], "a"), gauss([1.0], [[1.0]], "b"))
