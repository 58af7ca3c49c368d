import numpy as np
import pytest
from scipy import stats

from hexcryst.domain import geometry
from hexcryst.domain.constants import C6, CONSTANTS, hextrial_constant, lambda_for_volume
from hexcryst.domain.domain import DomainSpec, named_shape
from hexcryst.domain.measure import AtomicMeasure
from hexcryst.service_layer.analysis import handlers as analysis
from hexcryst.service_layer.certify import handlers as certify_handlers
from hexcryst.service_layer.energy import handlers as energy
from hexcryst.service_layer.optimize import handlers as optimize
from hexcryst.service_layer.transport import handlers as transport

pytestmark = pytest.mark.slow

LAMBDAS = (2.0 * C6, 2.0 * C6 / 8.0, 2.0 * C6 / 27.0)


def test_energy_never_below_hexagonal_bound(make_measure):
    checked = 0
    for shape in ('square', 'regular-hexagon'):
        for lam in LAMBDAS:
            domain = DomainSpec.polygon(named_shape(shape), lam, name=shape)
            for seed in range(167):
                measure = make_measure(domain, 1 + seed % 50, seed=seed)
                report, solution = energy.evaluate(domain, measure)
                assert report.total >= 3.0 * C6 * domain.V - 1e-9, (shape, lam, seed)
                assert solution.residual <= 1e-8
                assert analysis.euler_check(solution.partition, domain).passed, (shape, lam, seed)
                checked += 1
    assert checked >= 1000


def test_transport_matches_grid_oracle(unit_square, make_measure):
    for seed in range(50):
        measure = make_measure(unit_square, 1 + seed % 6, seed=1000 + seed)
        solution = transport.solve_sdot(unit_square, measure)
        assert solution.residual <= 1e-8
        oracle = transport.brute_force_ot(unit_square, measure, 200)
        assert oracle == pytest.approx(solution.cost, rel=5e-3), seed


def test_polygon_constants():
    report = certify_handlers.verify_cn(12)
    assert all(c.passed for c in report), [c.name for c in report if not c.passed]
    assert round(C6, 6) == 0.160375


def test_centered_hexagon_has_zero_defect(unit_hexagon):
    center, _ = geometry.min_second_moment(unit_hexagon.scaled)
    measure = AtomicMeasure.on(unit_hexagon, np.array([center]))
    report = energy.energy(unit_hexagon, measure)
    assert unit_hexagon.V == pytest.approx(1.0)
    assert abs(report.defect) <= 1e-10


def test_torus_minimizer_recovers_lattice(torus_3x3, make_lattice_measure):
    initial = make_lattice_measure(torus_3x3, perturb=0.05, seed=3)
    assert initial.n == 18
    config = optimize.MinimizerConfig(max_outer_iters=2000, position_tol=1e-10, tol_mass=1e-12)
    result = optimize.minimize(torus_3x3, initial.n, config, initial=initial)
    assert result.converged
    assert result.coupling_residual <= 1e-5
    assert result.report.defect <= 1e-6
    fit = analysis.lattice_fit(result.measure.points)
    assert fit.rms <= 1e-5 * CONSTANTS.a
    assert analysis.euler_check(result.partition, torus_3x3).passed


def test_hexagonal_trial_approaches_bound():
    offsets = ((0.0, 0.0), (0.21, 0.37), (0.43, 0.11))
    defects = []
    for k in range(2, 6):
        domain = DomainSpec.polygon(named_shape('square'), 2.0 * C6 * 4.0 ** -k, name='square')
        trials = [optimize.hexagonal_trial(domain, offset=off) for off in offsets]
        for trial in trials:
            excess = optimize.boundary_excess(domain, trial.value)
            assert excess <= hextrial_constant(0.1)
            assert analysis.euler_check(trial.partition, domain).passed
        config = optimize.MinimizerConfig(max_outer_iters=200, starts=2, seed=k)
        minimized = optimize.minimize(domain, int(round(domain.V)), config)
        assert minimized.history[-1] <= minimized.history[0]
        best = min([t.value for t in trials] + [minimized.report.total])
        defects.append(best / domain.V - 3.0 * C6)
    assert all(d > 0 for d in defects)
    assert all(b < a for a, b in zip(defects, defects[1:]))


def test_lattice_scaling_on_square():
    domain = DomainSpec.polygon(named_shape('square'), 2.0 * C6, name='square')
    checks = certify_handlers.fejes_toth_scaling(domain)
    assert all(c.passed for c in checks), [(c.name, c.detail) for c in checks if not c.passed]


def test_full_certificate():
    report = certify_handlers.certify(threads=2)
    assert report.passed, [(c.name, c.detail) for c in report.failures]


def test_crystallinity_tracks_defect(torus_3x3, make_lattice_measure):
    # one jitter pattern at shrinking amplitude
    rows = []
    for amplitude in (0.12, 0.06, 0.03, 0.0):
        measure = make_lattice_measure(torus_3x3, perturb=amplitude, seed=5)
        report, solution = energy.evaluate(torus_3x3, measure)
        result = optimize.MinimizerResult(measure, solution.partition, report, weights=solution.weights)
        stability = analysis.stability_report(result, torus_3x3, tau=0.05)
        assert stability.euler_pass
        rows.append((report.defect, stability.fraction_defective, stability.max_neighbor_deviation))
    defect, fraction, deviation = map(np.asarray, zip(*rows))
    assert np.all(np.diff(defect) < 0)
    assert defect[-1] == pytest.approx(0.0, abs=1e-9)
    assert np.all(np.diff(fraction) <= 0)
    assert fraction[-1] == 0.0
    assert stats.spearmanr(defect, deviation).correlation >= 0.8


def test_minimizers_at_decreasing_lambda():
    rows = []
    for volume in (8.0, 16.0, 32.0, 64.0):
        domain = DomainSpec.polygon(named_shape('square'), lambda_for_volume(volume), name='square')
        config = optimize.MinimizerConfig(max_outer_iters=300, starts=3, seed=4)
        result = optimize.minimize(domain, int(round(volume)), config)
        assert result.report.defect > 0
        assert result.history[-1] <= result.history[0] + 1e-9
        stability = analysis.stability_report(result, domain)
        assert stability.euler_pass
        rows.append((result.report.defect, stability.fraction_defective, stability.max_neighbor_deviation))
    defect, fraction, deviation = map(np.asarray, zip(*rows))
    assert np.all(np.diff(defect) < 0)
    assert stats.spearmanr(defect, fraction).correlation >= 0.8
    assert stats.spearmanr(defect, deviation).correlation >= 0.8


def test_square_scan_around_optimal_count(square_60):
    config = optimize.MinimizerConfig(max_outer_iters=100, seed=0)
    results = optimize.scan(square_60, range(40, 81), config)
    assert [r.n for r in results] == list(range(40, 81))
    best = optimize.best_of(results)
    assert best.report.total == min(r.report.total for r in results)
    assert best.report.defect > 0
    for result in results:
        assert analysis.euler_check(result.partition, square_60).passed
    assert results[0].n < best.n < results[-1].n
