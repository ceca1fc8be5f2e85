import sys

import pytest

from flowcob.field_graph import SkeletonMap, field_graph_from_edges
from flowcob.surface_map import build_map


@pytest.fixture
def loop_map():
    return build_map((1, 0), (1, 0))


@pytest.fixture
def edge_map():
    return build_map((1, 0), (0, 1))


@pytest.fixture
def two_loops():
    # alpha=(0 1)(2 3), sigma=(0 2 1 3)
    return build_map((1, 0, 3, 2), (2, 3, 1, 0))


@pytest.fixture
def theta_map():
    # two vertices joined by three edges, darts 2k at u, 2k+1 at w
    return build_map((1, 0, 3, 2, 5, 4), (2, 5, 4, 1, 0, 3))


def four_vertex_sphere():
    """Sink t with a saddle loop through s; source p inside the loop, q outside.

    Drawn in the plane: t at the origin, s at (2, 0), the saddle's two
    out-edges arc above and below to t, p at (1, 0), q far right.
    """
    kinds = ["sink", "saddle", "source", "source"]
    edges = [(1, 0), (1, 0), (2, 1), (3, 1), (2, 0), (3, 0)]
    rotations = [
        [(1, 1), (4, 1), (0, 1), (5, 1)],   # t: e1 below, e4 to p, e0 above, e5 around to q
        [(3, 1), (0, 0), (2, 1), (1, 0)],   # s: q right, e0 up-left, p left, e1 down-left
        [(2, 0), (4, 0)],
        [(3, 0), (5, 0)],
    ]
    return field_graph_from_edges(kinds, rotations, edges)


@pytest.fixture
def good_field():
    return four_vertex_sphere()


@pytest.fixture
def loop_skeleton(loop_map):
    return SkeletonMap(loop_map)


@pytest.fixture
def edge_skeleton(edge_map):
    return SkeletonMap(edge_map)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
