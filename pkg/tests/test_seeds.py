import numpy as np
import pytest

from zoomatch.errors import ConfigError
from zoomatch.seeds import check_seed, derive_rng, derive_seed


def test_check_seed():
    assert check_seed(0) == 0
    assert check_seed(2**31) == 2**31
    with pytest.raises(ConfigError):
        check_seed(-1)
    with pytest.raises(ConfigError):
        check_seed(1.5)


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    seen = {derive_seed(s, t) for s in range(4) for t in range(8)}
    assert len(seen) == 32
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)


def test_derive_rng_streams_independent():
    a = derive_rng(7, 1).random(4)
    b = derive_rng(7, 1).random(4)
    c = derive_rng(7, 2).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
