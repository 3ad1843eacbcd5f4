import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cellsp.complex import build_b2, build_skeleton, enumerate_candidate_cells
from cellsp.generators import random_connected_graph

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def connected_graphs(draw, min_nodes=3, max_nodes=9):
    n = draw(st.integers(min_nodes, max_nodes))
    e = draw(st.integers(n - 1, min(n * (n - 1) // 2, 2 * n + 2)))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_connected_graph(n, e, seed)


@st.composite
def cell_complexes(draw, min_nodes=3, max_nodes=9):
    """Random graph with a random subset of its independent cycles filled."""
    sk = draw(connected_graphs(min_nodes, max_nodes))
    cand = enumerate_candidate_cells(sk, 6)
    keep = draw(st.lists(st.booleans(), min_size=len(cand), max_size=len(cand)))
    return build_b2(sk, [c for c, k in zip(cand, keep) if k])


@pytest.fixture
def triangle():
    return build_skeleton([(1, 2), (2, 3), (1, 3)], index_base=1)


@pytest.fixture
def filled_triangle(triangle):
    return build_b2(triangle, [(0, 1, 2)])


@pytest.fixture
def square_diag():
    # 0-1-2-3 square split by the 0-2 diagonal
    return build_skeleton([(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and getattr(mod, "RESULTS", None):
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
