from importlib import resources

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def scenario_dir():
    return resources.files("darwin_certify") / "scenarios"
