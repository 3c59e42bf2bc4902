from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from unsatgen.cnf import Cnf, parse_dimacs

# The 4-clause trivial core over two variables: (A|B)(−A|B)(A|−B)(−A|−B).
TRIVIAL_CORE_TEXT = "p cnf 2 4\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 0\n"


@pytest.fixture
def trivial_core() -> Cnf:
    return parse_dimacs(TRIVIAL_CORE_TEXT)
