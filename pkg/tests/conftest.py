import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nsplate import mms


@pytest.fixture(scope="session")
def solve4():
    return mms.solve_level(4)


@pytest.fixture(scope="session")
def solve8():
    return mms.solve_level(8)


@pytest.fixture(scope="session")
def solve16():
    return mms.solve_level(16)
