import numpy as np
import pytest

from hexcryst.domain.constants import C6, hextrial_constant
from hexcryst.domain.domain import DomainSpec, named_shape
from hexcryst.domain.errors import InvalidParameter
from hexcryst.domain.measure import AtomicMeasure
from hexcryst.service_layer.optimize import handlers
from hexcryst.service_layer.optimize.handlers import MinimizerConfig, MinimizerState


def test_project_masses():
    v = handlers.project_masses(np.array([0.5, -0.2, 1.2]), 1.5, 0.01)
    assert v.sum() == pytest.approx(1.5)
    assert v.min() >= 0.01 - 1e-15
    feasible = np.array([0.2, 0.3, 0.5])
    assert handlers.project_masses(feasible, 1.0, 1e-6) == pytest.approx(feasible)
    assert handlers.project_masses(np.array([3.0]), 2.0, 0.1) == pytest.approx([2.0])


def test_halton_points_are_reproducible(unit_hexagon):
    a = handlers.halton_points(unit_hexagon, 20, handlers.rng_for(5))
    b = handlers.halton_points(unit_hexagon, 20, handlers.rng_for(5))
    c = handlers.halton_points(unit_hexagon, 20, handlers.rng_for(5, start=1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.shape == (20, 2)
    assert all(unit_hexagon.contains(p) for p in a)


def test_lloyd_step_lowers_energy(square_60, make_measure):
    state = MinimizerState.start(square_60, make_measure(square_60, 15, seed=6, equal=True))
    moved = handlers.lloyd_step(state)
    assert moved.energy <= state.energy + 1e-12
    assert moved.displacement > 0
    assert np.allclose(moved.measure.masses, state.measure.masses)


def test_lloyd_moves_shrink_near_the_lattice(torus_3x3, make_lattice_measure):
    state = MinimizerState.start(torus_3x3, make_lattice_measure(torus_3x3, perturb=0.02, seed=8), tol_mass=1e-12)
    moves = []
    for _ in range(50):
        moved = handlers.lloyd_step(state)
        step = torus_3x3.displacement(state.measure.points, moved.measure.points)
        moves.append(float(np.linalg.norm(step)))
        state = moved
    assert all(b <= a * (1.0 + 1e-6) + 1e-12 for a, b in zip(moves, moves[1:]))
    assert moves[-1] < 0.5 * moves[0]


def test_minimize_leaves_the_lattice_in_place(torus_3x3, make_lattice_measure):
    lattice = make_lattice_measure(torus_3x3)
    config = MinimizerConfig(max_outer_iters=5, tol_mass=1e-12)
    result = handlers.minimize(torus_3x3, lattice.n, config, initial=lattice)
    assert result.converged
    assert result.max_displacement < 1e-10
    assert np.abs(torus_3x3.displacement(lattice.points, result.measure.points)).max() < 1e-10
    assert result.report.defect == pytest.approx(0.0, abs=1e-10)


def two_cell_state(domain, masses):
    measure = AtomicMeasure.on(domain, [(0.25, 0.5), (0.75, 0.5)], masses)
    return MinimizerState.start(domain, measure, tol_mass=1e-11)


@pytest.mark.parametrize('mode', [handlers.FIXED_POINT, handlers.PROJECTED_GRADIENT])
def test_mass_update_evens_out_unequal_cells(mode, unit_square):
    state = two_cell_state(unit_square, [0.4, 0.6])
    updated = handlers.mass_update(state, mode)
    assert updated.energy < state.energy
    assert updated.measure.total == pytest.approx(unit_square.area)
    assert 0.4 < updated.measure.masses[0] < 0.6


def test_repeated_mass_updates_reach_equal_masses(unit_square):
    state = two_cell_state(unit_square, [0.4, 0.6])
    energies = [state.energy]
    for _ in range(8):
        state = handlers.mass_update(state, handlers.FIXED_POINT)
        energies.append(state.energy)
    assert np.all(np.diff(energies) < 0)
    assert state.measure.masses == pytest.approx([0.5, 0.5], abs=1e-3)


def test_no_mass_update_is_identity(square_60, make_measure):
    state = MinimizerState.start(square_60, make_measure(square_60, 5, seed=1))
    assert handlers.mass_update(state, handlers.NO_MASS_UPDATE) is state


def test_minimizer_config_validation():
    with pytest.raises(InvalidParameter):
        MinimizerConfig(mass_update='newton')
    with pytest.raises(InvalidParameter):
        MinimizerConfig(starts=0)
    with pytest.raises(InvalidParameter):
        MinimizerConfig(position_tol=0.0)


def test_minimize_is_monotone_and_deterministic(square_60):
    config = MinimizerConfig(max_outer_iters=15, seed=3)
    first = handlers.minimize(square_60, 12, config)
    second = handlers.minimize(square_60, 12, config)
    assert np.array_equal(first.measure.points, second.measure.points)
    assert first.report.total == second.report.total
    # up to the transport tolerance
    assert np.all(np.diff(first.history) <= 1e-6)
    assert first.report.total >= 3 * C6 * square_60.V - 1e-9
    assert first.iterations <= 15


def test_best_of_several_starts(unit_square):
    config = MinimizerConfig(max_outer_iters=5, starts=3, seed=1)
    best = handlers.minimize(unit_square, 4, config)
    single = handlers.minimize(unit_square, 4, MinimizerConfig(max_outer_iters=5, seed=1))
    assert best.report.total <= single.report.total + 1e-12


def test_minimize_needs_points(unit_square):
    with pytest.raises(InvalidParameter):
        handlers.minimize(unit_square, 0)


def test_scan_warm_starts(square_60):
    results = handlers.scan(square_60, [50, 52], MinimizerConfig(max_outer_iters=4))
    assert [r.n for r in results] == [50, 52]
    best = handlers.best_of(results)
    assert best.report.total == min(r.report.total for r in results)


def test_hexagonal_trial_on_commensurate_torus(torus_3x3):
    trial = handlers.hexagonal_trial(torus_3x3)
    assert trial.partition.n == 18
    assert trial.value == pytest.approx(54.0 * C6)
    assert trial.boundary_cells == 0
    measure = handlers.trial_measure(torus_3x3, trial.partition)
    assert measure.total == pytest.approx(18.0)


def test_hexagonal_trial_boundary_excess():
    domain = DomainSpec.polygon(named_shape('square'), 2.0 * C6 * 4.0 ** -4)
    trial = handlers.hexagonal_trial(domain, offset=(0.1, 0.2))
    assert trial.boundary_cells > 0
    assert trial.partition.areas.sum() == pytest.approx(domain.area)
    excess = handlers.boundary_excess(domain, trial.value)
    assert 0.0 < excess <= hextrial_constant(0.1)
