import numpy as np
import pytest
from hypothesis import settings

import bcp
from bcp.datasets import generate_structured_dataset, write_dataset

settings.register_profile("ci", derandomize=True, max_examples=100)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def nations_dir(tmp_path_factory):
    """Generated 14-entity / 56-relation / 2024-fact dataset directory."""
    d = tmp_path_factory.mktemp("data") / "nations-scale"
    write_dataset(d, generate_structured_dataset())
    return d


@pytest.fixture(scope="session")
def nations(nations_dir):
    """(vocab, store) for the generated dataset, inverse-augmented."""
    return bcp.load_dataset(nations_dir, augment=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
