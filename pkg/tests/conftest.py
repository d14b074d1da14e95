import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nhqm.core import PhysicalParams  # noqa: E402


@pytest.fixture
def m1():
    return PhysicalParams(1.0)


@pytest.fixture
def m_half():
    return PhysicalParams(0.5)
