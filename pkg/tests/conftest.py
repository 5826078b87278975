from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rothe_hvi import GalerkinSpace

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def random_spd(rng: np.random.Generator, dim: int, shift: float = 0.1) -> np.ndarray:
    b = rng.normal(size=(dim, dim))
    return b @ b.T + shift * np.eye(dim)


def make_space(gram_h: np.ndarray, gram_v: np.ndarray | None = None) -> GalerkinSpace:
    dim = gram_h.shape[0]
    if gram_v is None:
        gram_v = gram_h + np.eye(dim)
    return GalerkinSpace(
        gram_h=gram_h, gram_v=gram_v, trace=np.eye(1, dim), gram_u=np.eye(1)
    )


@pytest.fixture
def scalar_space() -> GalerkinSpace:
    return GalerkinSpace(gram_h=[[1.0]], gram_v=[[1.0]], trace=[[1.0]], gram_u=[[1.0]])
