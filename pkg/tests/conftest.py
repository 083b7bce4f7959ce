import numpy as np
import pytest
from hypothesis import settings

from mamorl import _kernels

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=["numpy", "numba"])
def kernels(request, monkeypatch):
    """Run a test once per kernel backend by swapping the active namespace."""
    kern = _kernels.NUMPY_KERNELS if request.param == "numpy" else _kernels.NUMBA_KERNELS
    monkeypatch.setattr(_kernels, "ACTIVE", kern)
    return kern


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
