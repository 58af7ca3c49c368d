import dataclasses
import logging
import math
import time
from typing import Any, Dict, Optional, Tuple

import numpy as np

from hexcryst import __version__
from hexcryst.adapters.runs import render
from hexcryst.adapters.runs.repository import AbstractRunRepository
from hexcryst.adapters.runs.schema import (
    CertificateReportSchema, RunConfigSchema, RunRecordSchema, StateSchema, canonical_hash, config_hash)
from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.errors import ConfigError, DegenerateFit
from hexcryst.domain.measure import AtomicMeasure
from hexcryst.domain.run import RunConfig, RunRecord
from hexcryst.service_layer.analysis import handlers as analysis
from hexcryst.service_layer.certify import handlers as certify_handlers
from hexcryst.service_layer.energy import handlers as energy
from hexcryst.service_layer.optimize import handlers as optimize
from hexcryst.service_layer.tessellation import handlers as tessellation
from hexcryst.service_layer.transport import handlers as transport

logger = logging.getLogger(__name__)

RECORD = 'record.json'
STATE = 'state.json'
CELLS = 'cells.csv'
SCAN = 'scan.csv'
RENDER = 'render.svg'
CERTIFICATE = 'certificate.json'
CELL_HEADER = ('cell_id', 'x', 'y', 'mass', 'weight', 'edges', 'second_moment', 'hexagon_eps', 'boundary_flag')


def version_tag() -> str:
    return f'v{__version__}'


def minimizer_config(config: RunConfig) -> optimize.MinimizerConfig:
    return optimize.MinimizerConfig(seed=config.seed, threads=config.threads, tol_mass=config.tol_mass,
                                    **config.minimizer)


def run_name(command: str, digest: str, seed: Optional[int] = None) -> str:
    name = f'{command}-{digest[:10]}'
    return name if seed is None else f'{name}-s{seed}'


def cell_rows(report, closeness):
    rows = []
    for c, eps in zip(report.cells, closeness):
        rows.append((c.index, repr(c.x), repr(c.y), repr(c.mass), repr(c.weight), c.edges,
                     repr(c.second_moment), repr(eps) if math.isfinite(eps) else 'inf', int(c.boundary)))
    return rows


def _lattice_summary(points: np.ndarray) -> Dict[str, Any]:
    try:
        fit = analysis.lattice_fit(points)
    except DegenerateFit as exc:
        return {'error': str(exc)}
    return {'theta': fit.theta, 'translation': fit.translation, 'rms': fit.rms}


def _store(repo: AbstractRunRepository, record: RunRecord, config: RunConfig, domain: DomainSpec,
           result: optimize.MinimizerResult, closeness) -> RunRecord:
    run_id = record.run_id
    repo.add_table(run_id, CELLS, CELL_HEADER, cell_rows(result.report, closeness))
    repo.add_document(run_id, STATE, StateSchema().dump({
        'config': RunConfigSchema().dump(config), 'config_hash': record.config_hash,
        'points': result.measure.points, 'masses': result.measure.masses,
        'weights': result.weights, 'energy': result.report.total, 'iterations': result.iterations}))
    repo.add_text(run_id, RENDER, render.render_partition(
        domain, result.partition, closeness, title=f'n={result.n}  d={result.report.defect:.3e}'))
    record.files = [RECORD, CELLS, STATE, RENDER] + record.files
    repo.add_document(run_id, RECORD, RunRecordSchema().dump(record))
    logger.info("run %s written (%s)", run_id, ', '.join(record.files))
    return record


def _finish(command: str, config: RunConfig, domain: DomainSpec, result: optimize.MinimizerResult,
            repo: AbstractRunRepository, timings: Dict[str, float], extra: Dict[str, Any],
            files=()) -> RunRecord:
    t0 = time.perf_counter()
    stability = analysis.stability_report(result, domain, config.tau)
    timings['analysis'] = time.perf_counter() - t0
    digest = config_hash(config)
    extra.update({
        'coupling_residual': result.coupling_residual, 'max_displacement': result.max_displacement,
        'rejected_steps': result.rejected_steps, 'history': result.history, 'seed': result.seed,
        'lattice_fit': _lattice_summary(result.measure.points) if result.n >= 3 else None})
    record = RunRecord(command=command, config_hash=digest, version=version_tag(),
                       run_id=repo.create(run_name(command, digest, config.seed)), timings=timings,
                       energy=result.report, stability=stability, converged=result.converged,
                       iterations=result.iterations, n=result.n, files=list(files), extra=extra)
    return _store(repo, record, config, domain, result, stability.closeness)


def run_minimize(config: RunConfig, repo: AbstractRunRepository,
                 state: Optional[Dict[str, Any]] = None) -> RunRecord:
    """Minimizes the energy for one point count, or resumes from a stored state, and writes the run."""
    if config.scan and state is None:
        return run_scan(config, repo)
    domain = config.build_domain()
    mconf = minimizer_config(config)
    t0 = time.perf_counter()
    if state is not None:
        initial = AtomicMeasure.on(domain, state['points'], state['masses'])
        weights = np.asarray(state['weights'], dtype=float)
        logger.info("resuming %d points from E=%s", initial.n, state.get('energy'))
        result = optimize.minimize(domain, initial.n, mconf, initial=initial, initial_weights=weights)
        extra = {'resumed_from_iterations': state.get('iterations', 0)}
    else:
        result = optimize.minimize(domain, config.n_values()[0], mconf)
        extra = {}
    timings = {'minimize': time.perf_counter() - t0}
    return _finish('minimize', config, domain, result, repo, timings, extra)


def run_scan(config: RunConfig, repo: AbstractRunRepository) -> RunRecord:
    """Minimizes over a range of point counts; stores the E(n) table and the best configuration."""
    domain = config.build_domain()
    t0 = time.perf_counter()
    results = optimize.scan(domain, config.n_values(), minimizer_config(config))
    timings = {'scan': time.perf_counter() - t0}
    best = optimize.best_of(results)
    table = [{'n': r.n, 'energy': r.report.total, 'defect': r.report.defect,
              'converged': r.converged, 'iterations': r.iterations} for r in results]
    record = _finish('scan', config, domain, best, repo, timings, {'scan': table, 'best_n': best.n}, files=[SCAN])
    repo.add_table(record.run_id, SCAN, ('n', 'energy', 'defect', 'converged', 'iterations'),
                   [(row['n'], repr(row['energy']), repr(row['defect']), int(row['converged']), row['iterations'])
                    for row in table])
    return record


def run_certify(repo: AbstractRunRepository, quick: bool = False, threads: int = 1,
                domain: Optional[DomainSpec] = None) -> RunRecord:
    """Runs every certificate check and writes the report."""
    t0 = time.perf_counter()
    report = certify_handlers.certify(domain, threads=threads, quick=quick)
    digest = canonical_hash({'command': 'certify', 'quick': quick, 'domain': repr(domain)})
    record = RunRecord(command='certify', config_hash=digest, version=version_tag(),
                       run_id=repo.create(run_name('certify', digest)),
                       timings={'certify': time.perf_counter() - t0}, certificate=report,
                       files=[RECORD, CERTIFICATE])
    repo.add_document(record.run_id, CERTIFICATE, CertificateReportSchema().dump(report))
    repo.add_document(record.run_id, RECORD, RunRecordSchema().dump(record))
    return record


def analysis_measure(domain: DomainSpec, data: np.ndarray, threads: int = 1) -> AtomicMeasure:
    """Measure from an ``x,y[,mass]`` table: given masses are rescaled to the domain area, missing ones are Voronoi areas."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    pts = domain.wrap(data[:, :2])
    if data.shape[1] >= 3:
        masses = data[:, 2]
        total = masses.sum()
        if abs(total - domain.area) > 1e-8 * domain.area:
            logger.warning("masses sum to %.12g, rescaling to the domain area %.12g", total, domain.area)
            masses = masses * (domain.area / total)
    else:
        masses = tessellation.voronoi_masses(domain, pts, threads=threads)
    return AtomicMeasure.on(domain, pts, masses)


def run_analyze(data: np.ndarray, config: RunConfig, repo: AbstractRunRepository) -> RunRecord:
    """Energy and crystallinity diagnostics of a given point set."""
    domain = config.build_domain()
    t0 = time.perf_counter()
    measure = analysis_measure(domain, data, config.threads)
    report, solution = energy.evaluate(domain, measure, tol_mass=config.tol_mass, threads=config.threads)
    result = optimize.MinimizerResult(measure, solution.partition, report, history=[report.total],
                                      coupling_residual=energy.coupling_residual(measure.masses, solution.weights)[1],
                                      weights=solution.weights)
    timings = {'energy': time.perf_counter() - t0}
    config = dataclasses.replace(config, n=measure.n, scan=None)
    return _finish('analyze', config, domain, result, repo, timings, {'points_hash': canonical_hash(data)})


def load_state(repo: AbstractRunRepository, run_id: str) -> Tuple[RunConfig, Dict[str, Any]]:
    """Reads and checks a run's state file."""
    state = StateSchema().load(repo.get_document(run_id, STATE))
    config = RunConfigSchema().load(state['config'])
    if config_hash(config) != state['config_hash']:
        raise ConfigError(f"{run_id}/{STATE}: config hash does not match the stored configuration")
    return config, state


def resume(repo: AbstractRunRepository, run_id: str, overrides: Optional[Dict[str, Any]] = None) -> RunRecord:
    """Continues a minimization from a run's stored measure and weights."""
    config, state = load_state(repo, run_id)
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return run_minimize(config, repo, state=state)


def run_render(repo: AbstractRunRepository, run_id: str) -> str:
    """Redraws a stored run from its state file and returns the SVG text."""
    config, state = load_state(repo, run_id)
    domain = config.build_domain()
    measure = AtomicMeasure.on(domain, state['points'], state['masses'])
    solution = transport.solve_sdot(domain, measure, tol_mass=config.tol_mass,
                                    weights=np.asarray(state['weights']), threads=config.threads)
    report = energy.report_from_solution(domain, measure, solution)
    closeness = [analysis.hexagon_closeness(c) for c in solution.partition.cells]
    svg = render.render_partition(domain, solution.partition, closeness,
                                  title=f'n={measure.n}  d={report.defect:.3e}')
    repo.add_text(run_id, RENDER, svg)
    return svg
