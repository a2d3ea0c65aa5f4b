"""Shared pytest configuration.

The tests directory is flat.  oracles.py holds independent reference
computations (transport enumeration, 1-d quantizer fixed point, density
quadrature) and each test module imports it directly; pytest puts this
directory on sys.path because there is no package __init__.
"""

import numpy as np
import pytest


@pytest.fixture
def rng():
    """Fresh deterministic generator per test."""
    return np.random.default_rng(20260822)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: end-to-end acceptance criteria with printed verdict lines"
    )
