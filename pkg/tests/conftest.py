import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flagsdp import GraphTheory  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def G():
    return GraphTheory


@pytest.fixture(scope="session")
def triangle(G):
    return G(3, edges=[[0, 1], [0, 2], [1, 2]])


@pytest.fixture(scope="session")
def triangle_free(G, triangle):
    return G.exclude([triangle])


@pytest.fixture(scope="session")
def problems_dir():
    return ROOT / "problems"
