import logging

import numpy as np
import pytest

from tenuniq.field_linalg import make_rng


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.WARNING, logger="tenuniq")


def basis(n, *indices):
    """Columns e_i (0-based) of the n x n identity."""
    return np.eye(n)[:, list(indices)]
