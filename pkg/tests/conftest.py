import time

import numpy as np
import pytest

from flexpoly import assembly as asm
from flexpoly import flex as fx
from flexpoly import generators as gen
from flexpoly import mesh as mc


def cube(scale=1.0):
    v = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                  [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], float) * scale
    f = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
    return mc.build_mesh(v, f)


def tetrahedron():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    f = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]
    return mc.build_mesh(v, f)


def octahedron():
    v = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    f = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4), (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    return mc.build_mesh(v, f)


class Fixture:
    """A named assembly with its mesh, constraints and traced flex (or grid)."""

    def __init__(self, name, sa, angle_step=1.0):
        t0 = time.perf_counter()
        self.name = name
        self.sa = sa
        self.mesh = sa.mesh()
        self.cs = fx.build_constraints(self.mesh, clamp=[self.mesh.index(lb) for lb in sa.fixed_labels])
        self.q0 = self.mesh.vertices.ravel().copy()
        if len(sa.drivers) == 1 or name in ("steffen", "flappy_bird"):
            drv = sa.driver(self.mesh, "hinge_26" if name == "flappy_bird" else None)
            self.paths = [fx.trace_flex(self.cs, self.mesh, self.q0, drv,
                                        fx.TraceOptions(angle_step=angle_step))]
            self.grid = None
        else:
            self.grid, self.paths = asm.flex_grid(sa, self.mesh, n=5, angle_step=angle_step)
        self.seconds = time.perf_counter() - t0

    @property
    def path(self):
        return self.paths[0]

    def configurations(self):
        qs = [s.q for p in self.paths for s in p.states]
        if self.grid is not None:
            qs += [q for row in self.grid for q in row]
        return qs


_CACHE = {}
SESSION_START = time.perf_counter()
VERDICTS = []


def pytest_collection_modifyitems(session, config, items):
    # acceptance criteria run last so the suite-time criterion sees the whole run
    items.sort(key=lambda it: it.nodeid.startswith("tests/test_acceptance.py")
               or it.nodeid.startswith("test_acceptance.py"))


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


def _fixture(name):
    if name not in _CACHE:
        builders = {
            "steffen": lambda: Fixture("steffen", asm.steffen_assembly(), angle_step=0.5),
            "flappy_bird": lambda: Fixture("flappy_bird", asm.flappy_bird_assembly()),
            "torus": lambda: Fixture("torus", asm.torus_assembly()),
            "bipedal": lambda: Fixture("bipedal", asm.bipedal_assembly()),
        }
        _CACHE[name] = builders[name]()
    return _CACHE[name]


@pytest.fixture(scope="session")
def steffen():
    return _fixture("steffen")


@pytest.fixture(scope="session")
def bird():
    return _fixture("flappy_bird")


@pytest.fixture(scope="session")
def torus():
    return _fixture("torus")


@pytest.fixture(scope="session")
def bipedal():
    return _fixture("bipedal")


@pytest.fixture(scope="session")
def named(steffen, bird, torus, bipedal):
    return {"steffen": steffen, "flappy_bird": bird, "torus": torus, "bipedal": bipedal}


@pytest.fixture(scope="session")
def steffen_crinkle():
    return gen.bricard_crinkle("I", gen.steffen_crinkle_lengths(), seed=0)


@pytest.fixture(scope="session")
def collar():
    p = dict(asm.BIRD_DEFAULTS)
    cc, _ = asm.bird_components(p)
    return cc


@pytest.fixture(scope="session")
def crinkle_paths(steffen_crinkle, collar):
    """Flex traces of the closed crinkles, keyed by name."""
    out = {}
    for name, c in (("steffen_crinkle", steffen_crinkle), ("collar", collar)):
        m = c.closed()
        cs = fx.build_constraints(m)
        drv = fx.Driver.for_edge(m, (c.idx("A"), c.idx("B")))
        out[name] = (c, fx.trace_flex(cs, m, m.vertices.ravel(), drv,
                                      fx.TraceOptions(angle_step=1.0, check_intersections=False,
                                                      bound=40.0, max_states=60)))
    return out
