import os
import sys

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from cwseg.image_io import GroundTruthMask, RasterImage  # noqa: E402
from cwseg.settings import get_settings  # noqa: E402
from cwseg.synthetic import stripes_vs_uniform, two_texture_image  # noqa: E402

np.seterr(all="warn")

hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Point the run database at a per-test sqlite file."""
    monkeypatch.setenv("CWSEG_DATABASE_URL", f"sqlite:///{tmp_path / 'runs.db'}")
    monkeypatch.delenv("CWSEG_RECORD_RUNS", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def gray_image():
    rng = np.random.default_rng(7)
    return RasterImage(rng.integers(0, 256, size=(6, 5, 1), dtype=np.uint8))


@pytest.fixture
def color_image():
    rng = np.random.default_rng(11)
    return RasterImage(rng.integers(0, 256, size=(4, 7, 3), dtype=np.uint8))


@pytest.fixture
def square_mask():
    """20x20 mask with an OBJECT square at rows/cols 6..13."""
    labels = np.zeros((20, 20), dtype=bool)
    labels[6:14, 6:14] = True
    return GroundTruthMask(labels)


@pytest.fixture(scope="session")
def texture_pair():
    return two_texture_image(128, seed=0)


@pytest.fixture(scope="session")
def stripes_pair():
    return stripes_vs_uniform(128)
