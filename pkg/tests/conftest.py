import math

import numpy as np
import pytest

from gktwist.models.geometry import Chart
from gktwist.services.connection import ConnectionSpec

SPHERE_BOUNDS = ((0.3, math.pi - 0.3), (0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def plane():
    return Chart(("u", "v"), ((-1.0, 1.0), (-1.0, 1.0)))


@pytest.fixture
def flat_spec(plane):
    return ConnectionSpec.flat(plane)


@pytest.fixture
def pullback_spec():
    chart = Chart(("u", "v"), ((0.0, 2.0), (0.0, 1.0)))
    return ConnectionSpec.from_chart_map(chart, ["u + v^2", "v"])


@pytest.fixture
def sphere_spec():
    chart = Chart(("u", "v"), SPHERE_BOUNDS)
    return ConnectionSpec.from_metric(chart, "1", "0", "sin(u)^2", "sphere")


@pytest.fixture
def traceful_spec():
    chart = Chart(("u", "v"), ((0.0, 2.0), (0.0, 1.0)))
    gamma = [[["v", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]
    return ConnectionSpec.from_gamma(chart, gamma, "traceful")


@pytest.fixture
def make_config():
    """Builder for run config dicts with sample counts small enough for unit tests."""

    def build(connection: dict, bounds, checks, seed: int = 7, **extra) -> dict:
        config = {
            "label": "test",
            "chart": {"names": ["u", "v"], "bounds": [list(b) for b in bounds]},
            "connection": connection,
            "checks": checks,
            "seed": seed,
            "samples": {
                "fiber_samples": 20,
                "gks_samples": 5,
                "twistor_points": 3,
                "invariant_points": 3,
                "identity_vectors": 5,
                "plus_sheet_scan": 50,
                "grid_size": 3,
            },
        }
        config.update(extra)
        return config

    return build
