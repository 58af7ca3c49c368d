import numpy as np
import pytest

from hexcryst.adapters.runs.schema import RunConfigSchema, config_hash
from hexcryst.domain.constants import C6
from hexcryst.domain.errors import ConfigError
from hexcryst.domain.lattice import TriangularLattice
from hexcryst.domain.reports import CertificateReport, Check
from hexcryst.domain.run import DomainConfig, RunConfig
from hexcryst.service_layer.runs import handlers


def small_config(**changes):
    data = {'domain': {'shape': 'square'}, 'v_lambda': 9.0, 'n': 6, 'seed': 2,
            'minimizer': {'max_outer_iters': 4}}
    data.update(changes)
    return RunConfigSchema().load(data)


def test_minimize_writes_every_file(fake_repo):
    config = small_config()
    record = handlers.run_minimize(config, fake_repo)
    files = fake_repo.runs[record.run_id]
    assert set(files) == {'record.json', 'cells.csv', 'state.json', 'render.svg'}
    assert files['cells.csv'][0] == list(handlers.CELL_HEADER)
    assert len(files['cells.csv']) == 1 + record.n
    assert files['record.json']['config_hash'] == config_hash(config)
    assert files['state.json']['config_hash'] == config_hash(config)
    assert files['record.json']['version'] == handlers.version_tag()
    assert files['render.svg'].lstrip().startswith('<?xml')
    assert record.energy.defect > 0


def test_identical_configs_give_identical_numbers(fake_repo):
    first = handlers.run_minimize(small_config(), fake_repo)
    second = handlers.run_minimize(small_config(), fake_repo)
    assert first.run_id != second.run_id
    assert fake_repo.runs[first.run_id]['cells.csv'] == fake_repo.runs[second.run_id]['cells.csv']
    assert first.energy.total == second.energy.total


def test_resume_continues_from_state(fake_repo):
    record = handlers.run_minimize(small_config(), fake_repo)
    resumed = handlers.resume(fake_repo, record.run_id)
    assert resumed.extra['resumed_from_iterations'] == record.iterations
    # the resumed run starts where the first one stopped
    assert resumed.extra['history'][0] == pytest.approx(record.energy.total, rel=1e-12, abs=1e-12)
    assert resumed.energy.total <= record.energy.total + 1e-6


def test_tampered_state_is_rejected(fake_repo):
    record = handlers.run_minimize(small_config(), fake_repo)
    fake_repo.runs[record.run_id]['state.json']['config']['seed'] = 99
    with pytest.raises(ConfigError):
        handlers.load_state(fake_repo, record.run_id)


def test_scan_table(fake_repo):
    config = small_config(n=None, scan=[4, 6])
    record = handlers.run_scan(config, fake_repo)
    table = fake_repo.runs[record.run_id]['scan.csv']
    assert table[0] == ['n', 'energy', 'defect', 'converged', 'iterations']
    assert [row[0] for row in table[1:]] == [4, 5, 6]
    assert record.n == record.extra['best_n']
    assert 'scan.csv' in record.files


def test_minimize_with_range_scans(fake_repo):
    record = handlers.run_minimize(small_config(n=None, scan=[3, 4]), fake_repo)
    assert record.command == 'scan'


def test_missing_point_count():
    with pytest.raises(ConfigError):
        RunConfig(domain=DomainConfig()).n_values()
    with pytest.raises(ConfigError):
        RunConfig(scan=[5, 3]).n_values()


def test_analyze_lattice_window(fake_repo):
    config = small_config(v_lambda=64.0, n=None)
    side = 8.0
    pts = TriangularLattice(translation=(0.37, 0.29)).points_in_box(0.05, 0.05, side - 0.05, side - 0.05)
    record = handlers.run_analyze(pts, config, fake_repo)
    assert record.stability.interior_fraction_defective == 0.0
    assert record.stability.boundary_fraction_defective > 0.0
    assert record.n == len(pts)
    # Voronoi masses solve the transport problem at zero weights
    assert np.allclose([c.weight for c in record.energy.cells], 0.0, atol=1e-12)


def test_analyze_rescales_given_masses(fake_repo):
    config = small_config(n=None)
    data = np.array([[0.75, 1.5, 1.0], [2.25, 1.5, 2.0]])
    record = handlers.run_analyze(data, config, fake_repo)
    assert [c.mass for c in record.energy.cells] == pytest.approx([3.0, 6.0])


def test_render_redraws_a_run(fake_repo):
    record = handlers.run_minimize(small_config(), fake_repo)
    del fake_repo.runs[record.run_id]['render.svg']
    svg = handlers.run_render(fake_repo, record.run_id)
    assert '<svg' in svg
    assert fake_repo.runs[record.run_id]['render.svg'] == svg


def test_certify_quick_record(fake_repo, monkeypatch):
    report = CertificateReport([Check('one', True), Check('two', False, computed=np.float64(1.5))])
    monkeypatch.setattr(handlers.certify_handlers, 'certify', lambda domain, threads, quick: report)
    record = handlers.run_certify(fake_repo, quick=True)
    doc = fake_repo.runs[record.run_id]['certificate.json']
    assert doc['passed'] is False
    assert doc['checks'][1]['computed'] == 1.5
    assert fake_repo.runs[record.run_id]['record.json']['certificate']['passed'] is False


def test_default_lambda_gives_unit_volume():
    assert RunConfig().resolved_lambda == pytest.approx(2 * C6)
    assert RunConfig().build_domain().V == pytest.approx(1.0)
