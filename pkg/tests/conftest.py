import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from relqa.numeric import available_backends, kernels

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=available_backends())
def backend(request, monkeypatch):
    """Run a test against each compiled/pure kernel backend in turn."""
    monkeypatch.setattr(kernels, "_impl", kernels.get_backend(request.param))
    return request.param
