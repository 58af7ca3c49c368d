import json
import os

import pytest
from click.testing import CliRunner

from hexcryst.domain.errors import ConfigError
from hexcryst.domain.reports import CertificateReport, Check
from hexcryst.entrypoints.cli.hexcryst import cli
from hexcryst.entrypoints.cli.schema import parse_domain, parse_n
from hexcryst.service_layer.certify import handlers as certify_handlers

SMALL = {'domain': {'shape': 'square'}, 'v_lambda': 9.0, 'n': 5, 'seed': 1,
         'minimizer': {'max_outer_iters': 3}}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(SMALL, indent=2))
    return str(path)


def run_dirs(root):
    return sorted(os.listdir(root))


def test_schema_command(runner):
    result = runner.invoke(cli, ['schema'])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    schemas = doc['components']['schemas']
    assert {'RunConfig', 'DomainConfig', 'RunRecord', 'State'} <= set(schemas)
    assert 'lambda' in schemas['RunConfig']['properties']


def test_malformed_config_names_the_line(runner, tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('{\n  "n": 5,\n  "seed": \n}\n')
    result = runner.invoke(cli, ['minimize', '--config', str(path), '--out', str(tmp_path / 'runs')])
    assert result.exit_code == 1
    assert 'config.json:4:' in result.output


def test_unknown_key_is_rejected(runner, tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('{\n  "n": 5,\n  "colour": "red"\n}\n')
    result = runner.invoke(cli, ['minimize', '--config', str(path), '--out', str(tmp_path / 'runs')])
    assert result.exit_code == 1
    assert 'config.json:3: colour' in result.output


def test_bad_value_is_rejected(runner, tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('{\n  "n": 5,\n  "tol_mass": 0.5\n}\n')
    result = runner.invoke(cli, ['minimize', '--config', str(path), '--out', str(tmp_path / 'runs')])
    assert result.exit_code == 1
    assert 'config.json:3: tol_mass' in result.output


def test_minimize_writes_a_run(runner, small_config, tmp_path):
    out = tmp_path / 'runs'
    result = runner.invoke(cli, ['minimize', '--config', small_config, '--out', str(out)])
    assert result.exit_code == 0, result.output
    (run_id,) = run_dirs(out)
    assert run_id.startswith('minimize-') and run_id.endswith('-s1')
    assert {'record.json', 'cells.csv', 'state.json', 'render.svg'} <= set(os.listdir(out / run_id))
    record = json.loads((out / run_id / 'record.json').read_text())
    assert record['n'] == 5
    assert 'n=5' in result.output


def test_command_line_overrides_config(runner, small_config, tmp_path):
    out = tmp_path / 'runs'
    result = runner.invoke(cli, ['minimize', '--config', small_config, '--out', str(out), '--seed', '7', '--n', '4'])
    assert result.exit_code == 0, result.output
    (run_id,) = run_dirs(out)
    assert run_id.endswith('-s7')
    state = json.loads((out / run_id / 'state.json').read_text())
    assert state['config']['seed'] == 7
    assert len(state['points']) == 4


def test_range_triggers_a_scan(runner, small_config, tmp_path):
    out = tmp_path / 'runs'
    result = runner.invoke(cli, ['minimize', '--config', small_config, '--out', str(out), '--n', '3..4'])
    assert result.exit_code == 0, result.output
    (run_id,) = run_dirs(out)
    assert run_id.startswith('scan-')
    lines = (out / run_id / 'scan.csv').read_text().splitlines()
    assert lines[0] == 'n,energy,defect,converged,iterations'
    assert [line.split(',')[0] for line in lines[1:]] == ['3', '4']


def test_resume_and_render(runner, small_config, tmp_path):
    out = tmp_path / 'runs'
    runner.invoke(cli, ['minimize', '--config', small_config, '--out', str(out)])
    (run_id,) = run_dirs(out)
    os.remove(out / run_id / 'render.svg')

    result = runner.invoke(cli, ['render', str(out / run_id)])
    assert result.exit_code == 0, result.output
    assert (out / run_id / 'render.svg').read_text().lstrip().startswith('<?xml')

    result = runner.invoke(cli, ['minimize', '--resume', str(out / run_id)])
    assert result.exit_code == 0, result.output
    assert len(run_dirs(out)) == 2


def test_render_unknown_run(runner, tmp_path):
    result = runner.invoke(cli, ['render', 'missing-run', '--out', str(tmp_path)])
    assert result.exit_code == 1


def test_analyze_points_file(runner, tmp_path):
    points = tmp_path / 'points.csv'
    points.write_text('x,y\n0.25,0.25\n0.75,0.25\n0.25,0.75\n0.75,0.75\n')
    config = tmp_path / 'unit.json'
    config.write_text(json.dumps({'domain': {'shape': 'square'}, 'v_lambda': 1.0}))
    out = tmp_path / 'runs'
    result = runner.invoke(cli, ['analyze', str(points), '--config', str(config), '--out', str(out)])
    assert result.exit_code == 0, result.output
    (run_id,) = run_dirs(out)
    assert run_id.startswith('analyze-')
    record = json.loads((out / run_id / 'record.json').read_text())
    assert record['n'] == 4
    # four equal squares of side 1/2 in the unit square
    assert record['energy']['transport'] == pytest.approx(4 * 0.25 ** 2 / 6, rel=1e-6)


def test_analyze_rejects_wide_rows(runner, tmp_path):
    points = tmp_path / 'points.csv'
    points.write_text('0.1,0.2,0.3,0.4\n')
    result = runner.invoke(cli, ['analyze', str(points), '--out', str(tmp_path / 'runs')])
    assert result.exit_code == 1


def test_certify_failure_exit_code(runner, tmp_path, monkeypatch):
    report = CertificateReport([Check('c6', True), Check('lower-bound', False, detail='violated')])
    monkeypatch.setattr(certify_handlers, 'certify', lambda domain=None, threads=1, quick=False: report)
    result = runner.invoke(cli, ['certify', '--quick', '--out', str(tmp_path)])
    assert result.exit_code == 3
    assert 'FAIL  lower-bound' in result.output
    (run_id,) = run_dirs(tmp_path)
    assert json.loads((tmp_path / run_id / 'certificate.json').read_text())['passed'] is False


def test_certify_success_exit_code(runner, tmp_path, monkeypatch):
    report = CertificateReport([Check('c6', True)])
    monkeypatch.setattr(certify_handlers, 'certify', lambda domain=None, threads=1, quick=False: report)
    result = runner.invoke(cli, ['certify', '--out', str(tmp_path)])
    assert result.exit_code == 0
    assert 'PASS  c6' in result.output


def test_testing_config_writes_no_log(runner, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runner.invoke(cli, ['schema'])
    runner.invoke(cli, ['render', 'missing', '--out', str(tmp_path / 'runs')])
    assert not (tmp_path / 'logs').exists()


def test_parse_domain_forms():
    assert parse_domain('square').shape == 'square'
    assert parse_domain('regular-k-gon:7').sides == 7
    assert parse_domain('torus:1.5').gamma == 1.5
    torus = parse_domain('commensurate-torus:3x2')
    assert (torus.k, torus.m) == (3, 2)


def test_parse_domain_vertex_file(tmp_path):
    path = tmp_path / 'kite.json'
    path.write_text(json.dumps([[0, 0], [2, 0], [2, 1], [0, 1]]))
    domain = parse_domain(str(path))
    assert domain.shape == 'polygon'
    assert len(domain.vertices) == 4


def test_parse_domain_unknown():
    with pytest.raises(ConfigError):
        parse_domain('dodecahedron')


def test_parse_n():
    assert parse_n('12') == {'n': 12, 'scan': None}
    assert parse_n('50..70') == {'n': None, 'scan': [50, 70]}
    with pytest.raises(ConfigError):
        parse_n('many')
