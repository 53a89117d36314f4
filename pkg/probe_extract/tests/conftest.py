import numpy as np
import pytest
from PIL import Image


def write_png(path, seed, size=(40, 32)):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(arr).save(path)
    return path


@pytest.fixture
def png():
    return write_png


@pytest.fixture
def image_dir(tmp_path):
    d = tmp_path / "images"
    d.mkdir()
    for i in range(5):
        write_png(d / f"img{i}.png", seed=i)
    return d
