import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repo", max_examples=40, deadline=None)
settings.load_profile("repo")

# ensembles inside the tests run in-process unless a caller asks otherwise
os.environ.setdefault("EIGENPURIFY_WORKERS", "1")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
