import os
import sys
from fractions import Fraction

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from singularity_module import CyclicQuotient, in_A  # noqa: E402

DATA_DIR = os.path.join(ROOT, "data")

# the three singularities of A(4, 1/13) with mld = sum / r
SURVIVORS = [
    (19, (3, 4, 5, 7, 18)),
    (17, (2, 3, 5, 7, 16)),
    (14, (3, 5, 13, 2, 4)),
]


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def expected_dir():
    return os.path.join(DATA_DIR, "expected")


@pytest.fixture
def systems_dir():
    return os.path.join(DATA_DIR, "systems")


@pytest.fixture
def gap_threefold():
    return CyclicQuotient(13, (3, 4, 5))


@pytest.fixture(params=SURVIVORS, ids=lambda case: f"r{case[0]}")
def survivor(request):
    """A level-4 survivor together with one witnessing role assignment."""
    r, weights = request.param
    cq = CyclicQuotient(r, weights)
    membership = in_A(cq, 4, Fraction(1, 13))
    return cq, membership.roles[0]
