import numpy as np
import pytest

from models.configModel import PipelineConfig
from services import gaborbank


@pytest.fixture(scope="session")
def bank():
    return gaborbank.build_filterbank()


@pytest.fixture
def cfg():
    return PipelineConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
