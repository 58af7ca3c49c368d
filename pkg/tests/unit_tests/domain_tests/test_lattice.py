import numpy as np
import pytest

from hexcryst.domain.constants import CONSTANTS
from hexcryst.domain.lattice import TriangularLattice


def test_unit_density_and_spacing():
    lattice = TriangularLattice()
    assert lattice.density == pytest.approx(1.0)
    assert lattice.spacing == pytest.approx(CONSTANTS.a)
    assert np.linalg.norm(lattice.site(1, 0) - lattice.site(0, 0)) == pytest.approx(CONSTANTS.a)
    assert np.linalg.norm(lattice.site(0, 1) - lattice.site(0, 0)) == pytest.approx(CONSTANTS.a)


def test_coordinates_invert_sites():
    lattice = TriangularLattice(theta=0.3, translation=(0.2, -0.1), scale=1.5)
    assert lattice.coordinates(lattice.site(2, -3))[0] == pytest.approx([2.0, -3.0])


def test_points_in_box_count():
    pts = TriangularLattice().points_in_box(0.0, 0.0, 10.0, 10.0)
    # one point per unit area up to a boundary layer
    assert 80 <= len(pts) <= 120
    assert np.all((pts >= -1e-12) & (pts <= 10.0 + 1e-12))


def test_nearest_site():
    lattice = TriangularLattice(theta=0.1)
    sites = lattice.points_in_box(-2.0, -2.0, 2.0, 2.0)
    rng = np.random.default_rng(3)
    jitter = sites + rng.uniform(-0.05, 0.05, sites.shape)
    assert np.allclose(lattice.nearest(jitter), sites)
    assert np.all(lattice.residuals(jitter) <= 0.05 * np.sqrt(2.0) + 1e-12)
    assert np.allclose(lattice.residuals(sites), 0.0, atol=1e-12)
