from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ltnet", deadline=None, max_examples=60)
settings.load_profile("ltnet")

MONOSTABLE_W = np.array([[0.9, -2.0], [5.0, -1.5]])
BISTABLE_W = np.array([[1.1, -2.0], [5.0, -1.5]])


def random_p_complement(rng, n, scale=0.3):
    """Random W with I - W a P-matrix (small spectral norm suffices)."""
    W = rng.normal(0, 1, (n, n))
    return scale * W / np.linalg.norm(W, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
