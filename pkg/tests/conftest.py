import numpy as np
import pytest

from hexcryst import config
from hexcryst.adapters.runs.repository import AbstractRunRepository
from hexcryst.domain import geometry
from hexcryst.domain.constants import C6, lambda_for_volume
from hexcryst.domain.domain import DomainSpec, commensurate_torus, named_shape
from hexcryst.domain.lattice import TriangularLattice
from hexcryst.domain.measure import AtomicMeasure


class TestConfig(config.Config):
    TESTING = True
    THREADS = 1
    TOL_MASS = 1e-9


@pytest.fixture(autouse=True)
def testing_config(monkeypatch):
    monkeypatch.setattr(config.Config, 'TESTING', True)


#### Domains
####

@pytest.fixture
def unit_square():
    # lambda = 2 c6 gives V = 1
    return DomainSpec.polygon(named_shape('square'), 2.0 * C6, name='square')


@pytest.fixture
def unit_hexagon():
    return DomainSpec.polygon(named_shape('regular-hexagon'), 2.0 * C6, name='regular-hexagon')


@pytest.fixture
def square_60():
    return DomainSpec.polygon(named_shape('square'), lambda_for_volume(60.0), name='square')


@pytest.fixture
def torus_3x3():
    return commensurate_torus(3, 3)


@pytest.fixture
def flat_torus():
    return DomainSpec.torus(1.0, lambda_for_volume(16.0))


def random_measure(domain: DomainSpec, n: int, seed: int = 0, equal: bool = False) -> AtomicMeasure:
    """Random interior points with random masses on the simplex scaled to the domain area."""
    rng = np.random.default_rng(seed)
    xmin, ymin, xmax, ymax = domain.bounding_box()
    pts = []
    while len(pts) < n:
        p = rng.uniform((xmin, ymin), (xmax, ymax))
        if domain.is_torus or _inside_with_margin(domain, p):
            pts.append(p)
    masses = None if equal else rng.dirichlet(np.full(n, 2.0)) * domain.area
    return AtomicMeasure.on(domain, np.array(pts), masses)


def _inside_with_margin(domain: DomainSpec, p, margin: float = 1e-3) -> bool:
    return geometry.contains(domain.scaled, p, tol=-margin * domain.V ** 0.5)


def lattice_measure(domain: DomainSpec, perturb: float = 0.0, seed: int = 0) -> AtomicMeasure:
    """Unit-density lattice sites of a torus, each of mass one, optionally jittered."""
    lx, ly = domain.periods
    pts = TriangularLattice().points_in_box(0.0, 0.0, lx, ly)
    pts = pts[(pts[:, 0] < lx - 1e-9) & (pts[:, 1] < ly - 1e-9)]
    if perturb:
        rng = np.random.default_rng(seed)
        pts = pts + perturb * TriangularLattice().spacing * rng.uniform(-1.0, 1.0, pts.shape)
    return AtomicMeasure.on(domain, pts)


#### Runs
####

class FakeRunRepository(AbstractRunRepository):

    def __init__(self):
        super().__init__()
        self.runs = {}

    def create(self, name):
        run_id, k = name, 1
        while run_id in self.runs:
            k += 1
            run_id = f'{name}-{k}'
        self.runs[run_id] = {}
        return run_id

    def add_document(self, run_id, name, payload):
        self.runs[run_id][name] = payload

    def add_table(self, run_id, name, header, rows):
        self.runs[run_id][name] = [list(header)] + [list(r) for r in rows]

    def add_text(self, run_id, name, text):
        self.runs[run_id][name] = text

    def get_document(self, run_id, name):
        return self.runs[run_id][name]

    def list(self):
        return sorted(self.runs)


@pytest.fixture
def fake_repo():
    return FakeRunRepository()


@pytest.fixture
def make_measure():
    return random_measure


@pytest.fixture
def make_lattice_measure():
    return lattice_measure
