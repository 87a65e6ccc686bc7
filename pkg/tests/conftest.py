import json
from pathlib import Path

import numpy as np
import pytest

from flightscape.geo import PolarLocation
from flightscape.pcm import GridSpec

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "flightscape" / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def park_dir() -> Path:
    return FIXTURES / "park"


@pytest.fixture(scope="session")
def park_geojson(park_dir) -> dict:
    return json.loads((park_dir / "map.geojson").read_text())


def make_grid(rows=10, cols=10, width=100.0, height=100.0,
              lat=48.0, lon=9.0) -> GridSpec:
    return GridSpec(origin=PolarLocation(lat, lon), width=width, height=height,
                    rows=rows, cols=cols)


@pytest.fixture
def grid10() -> GridSpec:
    return make_grid()


def assert_unit_interval(values: np.ndarray) -> None:
    assert np.all(values >= 0.0) and np.all(values <= 1.0)
