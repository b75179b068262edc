import os
import sys
from pathlib import Path

# Scripts import each other by bare module name; no log files from tests
os.environ['LOG_TO_FILE'] = '0'
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / 'src'))

import pytest  # noqa: E402

from ensembles import RngStream  # noqa: E402
from precision import ExponentRange, PrecisionContext  # noqa: E402


@pytest.fixture
def half():
    return PrecisionContext(10)


@pytest.fixture
def half_clamped():
    return PrecisionContext(10, exponent_range=ExponentRange.IEEE_BINARY16)


@pytest.fixture
def single():
    return PrecisionContext(23)


@pytest.fixture
def working():
    return PrecisionContext(52)


@pytest.fixture
def stream():
    return RngStream(1234)


@pytest.fixture
def rng():
    return RngStream(1234).generator()
