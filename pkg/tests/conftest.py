import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nnec.neighbours import build_graph  # noqa: E402
from nnec.synthetic import FIVE_BLOBS, sample  # noqa: E402

DATA_DIR = Path(__file__).parent / "data"
UCI_DIR = Path(os.environ.get("NNEC_UCI_DIR", DATA_DIR / "uci"))

LINE6 = np.array([0.0, 1.0, 2.0, 10.0, 11.0, 12.0]).reshape(-1, 1)

ACCEPTANCE_LINES = []


@pytest.fixture
def line6_graph():
    return build_graph(LINE6, 2)


@pytest.fixture(scope="session")
def blobs():
    return sample(FIVE_BLOBS, seed=0)


@pytest.fixture(scope="session")
def blobs_graph(blobs):
    return build_graph(blobs, 25)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
