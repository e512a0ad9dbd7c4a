from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from apmlab.globalmap import ExactGlobalMap
from apmlab.model import Chart, ModelMap
from apmlab.saddle import SaddleNormalForm

settings.register_profile(
    "apmlab", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("apmlab")


def build_model(lam=0.5, orientation=1, b=-1.0, c=1.0, d=1.0, x_plus=1.0, y_minus=1.0, mu=0.0,
                sigma=0.0, f03=0.0, betas=(), eps=None) -> ModelMap:
    chart = None if eps is None else Chart(eps * min(x_plus, y_minus), eps * min(x_plus, y_minus))
    return ModelMap(
        SaddleNormalForm(lam, tuple(betas), orientation),
        ExactGlobalMap(x_plus, y_minus, mu, b, c, d, sigma, f03),
        chart=chart,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
