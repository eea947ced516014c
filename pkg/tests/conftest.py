import numpy as np
import pytest

from chromagrip.config import AppConfig


@pytest.fixture
def config() -> AppConfig:
    return AppConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
