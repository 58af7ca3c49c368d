import dataclasses
import json
import os
from functools import wraps

import click
from marshmallow import ValidationError

from hexcryst import __version__
from hexcryst.adapters.runs.repository import FileSystemRunRepository, read_points
from hexcryst.config import Config
from hexcryst.domain.errors import HexcrystError
from hexcryst.entrypoints.cli import configure_logging
from hexcryst.entrypoints.cli.errors import error_response, exit_code_for
from hexcryst.entrypoints.cli.schema import api_spec, load_config, parse_domain, parse_n
from hexcryst.service_layer.runs import handlers


def reports_errors(command):
    """Maps library and input errors to exit codes with a one-line message."""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except (HexcrystError, ValidationError, OSError, ValueError) as exc:
            code = exit_code_for(exc)
            raise click.exceptions.Exit(error_response(code, str(exc)))
    return wrapper


def run_options(command):
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='Run config (JSON).'),
        click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), help='Seed of the start configurations.'),
        click.option('--lambda', 'lam', type=float, help='Scaling parameter lambda.'),
        click.option('--domain', help='Shape name, NAME:PARAM, or a JSON file of vertices.'),
        click.option('--n', 'n_spec', help='Number of points, or a range A..B.'),
        click.option('--out', type=click.Path(file_okay=False), default=lambda: Config.RUNS_DIR,
                     help='Directory holding the run directories.'),
        click.option('--tol-mass', type=float, help='Relative cell-area tolerance of the transport solver.'),
        click.option('--threads', type=click.IntRange(1), envvar='HEXCRYST_THREADS', help='Worker threads.'),
        click.option('--verbose', '-v', is_flag=True, help='Debug logging to stderr.'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def build_config(config_path, seed, lam, domain, n_spec, tol_mass, threads):
    """The config file with command-line overrides applied."""
    config = load_config(config_path)
    changes = {}
    if config_path is None:
        changes['tol_mass'] = Config.TOL_MASS
    if seed is not None:
        changes['seed'] = seed
    if lam is not None:
        changes.update(lam=lam, v_lambda=None)
    if domain is not None:
        changes['domain'] = parse_domain(domain)
    if n_spec is not None:
        changes.update(parse_n(n_spec))
    if tol_mass is not None:
        changes['tol_mass'] = tol_mass
    if threads is not None:
        changes['threads'] = threads
    return dataclasses.replace(config, **changes)


def echo_record(record):
    click.echo(f'run {record.run_id}  config {record.config_hash[:12]}  {record.version}')
    if record.energy is not None:
        click.echo(f'n={record.n}  E={record.energy.total:.12g}  d={record.energy.defect:.6e}  '
                   f'converged={record.converged}')
    if record.stability is not None:
        s = record.stability
        click.echo(f'defective {s.fraction_defective:.3f} (interior {s.interior_fraction_defective:.3f})  '
                   f'neighbour deviation {s.max_neighbor_deviation:.3e}  '
                   f'euler {"ok" if s.euler_pass else "VIOLATED"}')


@click.group()
@click.version_option(__version__)
def cli():
    """Energy minimizers of the optimal-transport crystallization problem."""


@cli.command()
@run_options
@click.option('--resume', 'resume_run', help='Continue from the state of this run.')
@reports_errors
def minimize(config_path, seed, lam, domain, n_spec, out, tol_mass, threads, verbose, resume_run):
    """Minimize the energy for one point count (or a range given as A..B)."""
    configure_logging(Config, verbose)
    if resume_run:
        if os.path.isdir(resume_run):
            out, resume_run = os.path.split(os.path.normpath(resume_run))
        overrides = {}
        if threads is not None:
            overrides['threads'] = threads
        record = handlers.resume(FileSystemRunRepository(out or '.'), resume_run, overrides)
    else:
        config = build_config(config_path, seed, lam, domain, n_spec, tol_mass, threads)
        record = handlers.run_minimize(config, FileSystemRunRepository(out))
    echo_record(record)


@cli.command()
@run_options
@reports_errors
def scan(config_path, seed, lam, domain, n_spec, out, tol_mass, threads, verbose):
    """Minimize for every point count in A..B and keep the best."""
    configure_logging(Config, verbose)
    config = build_config(config_path, seed, lam, domain, n_spec, tol_mass, threads)
    if not config.scan:
        config = dataclasses.replace(config, scan=[config.n_values()[0]] * 2, n=None)
    record = handlers.run_scan(config, FileSystemRunRepository(out))
    for row in record.extra['scan']:
        click.echo(f"n={row['n']:4d}  E={row['energy']:.12g}  d={row['defect']:.6e}")
    echo_record(record)


@cli.command()
@click.option('--out', type=click.Path(file_okay=False), default=lambda: Config.RUNS_DIR)
@click.option('--threads', type=click.IntRange(1), envvar='HEXCRYST_THREADS', default=1)
@click.option('--quick', is_flag=True, help='Smaller grids and fewer lattice sizes.')
@click.option('--verbose', '-v', is_flag=True)
@reports_errors
def certify(out, threads, quick, verbose):
    """Re-derive every constant and inequality the bounds rely on."""
    configure_logging(Config, verbose)
    record = handlers.run_certify(FileSystemRunRepository(out), quick=quick, threads=threads)
    for check in record.certificate.checks:
        click.echo(f"{'PASS' if check.passed else 'FAIL'}  {check.name}  {check.detail}")
    click.echo(f'run {record.run_id}')
    if not record.certificate.passed:
        failed = ', '.join(c.name for c in record.certificate.failures)
        raise click.exceptions.Exit(error_response(3, f'failed checks: {failed}'))


@cli.command()
@click.argument('points', type=click.Path(exists=True, dir_okay=False))
@run_options
@click.option('--tau', type=float, help='Relative neighbour-distance tolerance of a good point.')
@reports_errors
def analyze(points, config_path, seed, lam, domain, n_spec, out, tol_mass, threads, verbose, tau):
    """Energy and crystallinity of an external point set (CSV: x,y[,mass])."""
    configure_logging(Config, verbose)
    config = build_config(config_path, seed, lam, domain, n_spec, tol_mass, threads)
    if tau is not None:
        config = dataclasses.replace(config, tau=tau)
    record = handlers.run_analyze(read_points(points), config, FileSystemRunRepository(out))
    echo_record(record)


@cli.command()
@click.argument('run')
@click.option('--out', type=click.Path(file_okay=False), default=lambda: Config.RUNS_DIR)
@click.option('--verbose', '-v', is_flag=True)
@reports_errors
def render(run, out, verbose):
    """Redraw a stored run as SVG."""
    configure_logging(Config, verbose)
    if os.path.isdir(run):
        out, run = os.path.split(os.path.normpath(run))
    repo = FileSystemRunRepository(out or '.')
    handlers.run_render(repo, run)
    click.echo(repo.path(run, handlers.RENDER))


@cli.command()
def schema():
    """Print the documented schema of the config and report files."""
    click.echo(json.dumps(api_spec().to_dict(), indent=2, sort_keys=True))
