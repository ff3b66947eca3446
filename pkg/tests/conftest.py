import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from isingrep.lattice import (
    build_box,
    build_hexagonal_patch,
    build_torus,
    cycle_graph,
    path_graph,
)


@pytest.fixture(scope="session")
def path2():
    return path_graph(2)


@pytest.fixture(scope="session")
def triangle():
    return cycle_graph(3)


@pytest.fixture(scope="session")
def c4():
    return cycle_graph(4)


@pytest.fixture(scope="session")
def grid33():
    return build_box(2, 1)


@pytest.fixture(scope="session")
def torus12():
    return build_torus(2, 1)


@pytest.fixture(scope="session")
def torus22():
    return build_torus(2, 2)


@pytest.fixture(scope="session")
def hexpatch1():
    return build_hexagonal_patch(1)


@pytest.fixture(scope="session")
def hexpatch2():
    return build_hexagonal_patch(2)


def coupling_fixture_hosts():
    """The connected <=12-edge hosts of the acceptance fixture set."""
    return [
        ("path-2", path_graph(2)),
        ("cycle-4", cycle_graph(4)),
        ("triangle", cycle_graph(3)),
        ("grid-3x3", build_box(2, 1)),
        ("torus-1-2", build_torus(2, 1)),
        ("hex-patch-1", build_hexagonal_patch(1)),
    ]
