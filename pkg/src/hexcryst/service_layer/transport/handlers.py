import logging
from typing import Optional, Sequence

import numpy as np
import ot
from scipy.sparse import coo_matrix, identity
from scipy.sparse.linalg import spsolve

from hexcryst.domain import geometry
from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.errors import EmptyCellUnrecoverable, InstanceTooLarge, InvalidParameter, NonConvergence
from hexcryst.domain.geometry import TOL_GEOM
from hexcryst.domain.measure import AtomicMeasure, CellPartition, TransportSolution, WeightedSites
from hexcryst.service_layer.tessellation import handlers as tessellation

logger = logging.getLogger(__name__)

EPS_HESSIAN = 1e-12
MIN_STEP = 2.0 ** -30


def _site_refs(partition: CellPartition, points: Optional[np.ndarray]) -> np.ndarray:
    if points is None:
        return partition.points
    pts = np.asarray(points, dtype=float)
    if partition.periods is not None:
        per = np.asarray(partition.periods)
        d = pts - partition.points
        pts = pts - per * np.round(d / per)
    return pts


def transport_cost(partition: CellPartition, points: Optional[Sequence[Sequence[float]]] = None) -> float:
    """Sum over cells of the polar second moment about the cell's site."""
    refs = _site_refs(partition, points)
    return float(sum(geometry.second_moment(c, refs[i])
                     for i, c in enumerate(partition.cells) if c is not None))


def area_jacobian(partition: CellPartition):
    """Weighted graph Laplacian L with L_ij = -|e_ij| / (2 |z_i - z_j|); d(areas)/d(weights) = -L."""
    n = partition.n
    rows, cols, vals = [], [], []
    pts = partition.points
    per = np.zeros(2) if partition.periods is None else np.asarray(partition.periods)
    for e in partition.edges:
        if e.i == e.j:
            continue
        dist = float(np.hypot(*(pts[e.j] + per * np.asarray(e.shift) - pts[e.i])))
        c = e.length / (2.0 * dist)
        rows += [e.i, e.j, e.i, e.j]
        cols += [e.j, e.i, e.i, e.j]
        vals += [-c, -c, c, c]
    return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _evaluate(domain, points, weights, masses, tol, threads):
    partition = tessellation.power_diagram(domain, WeightedSites.create(points, weights), tol=tol, threads=threads)
    areas = partition.areas
    cost = transport_cost(partition)
    dual = cost + float(np.dot(weights, areas - masses))
    return partition, areas, cost, dual


def solve_sdot(domain: DomainSpec, measure: AtomicMeasure, tol_mass: float = 1e-8,
               weights: Optional[np.ndarray] = None, max_iters: int = 100,
               tol: float = TOL_GEOM, threads: int = 1) -> TransportSolution:
    """Finds power weights whose cells carry the prescribed masses, by damped Newton ascent on the dual."""
    if not 0 < tol_mass <= 1e-2:
        raise InvalidParameter(f"tol_mass must lie in (0, 1e-2], got {tol_mass}")
    points, masses = measure.points, measure.masses
    n = measure.n
    w = np.zeros(n) if weights is None else np.asarray(weights, dtype=float) - np.min(weights)
    partition, areas, cost, dual = _evaluate(domain, points, w, masses, tol, threads)
    if partition.empty and weights is not None:
        logger.debug("warm start has %d empty cells, restarting from zero weights", len(partition.empty))
        w = np.zeros(n)
        partition, areas, cost, dual = _evaluate(domain, points, w, masses, tol, threads)
    if partition.empty:
        raise EmptyCellUnrecoverable(f"cells {partition.empty[:5]} are empty even with zero weights")

    floor = 0.5 * min(areas.min(), masses.min())
    history = [dual]
    for it in range(max_iters + 1):
        grad = areas - masses
        residual = float(np.max(np.abs(grad) / masses))
        jac = area_jacobian(partition)
        if residual <= tol_mass:
            logger.debug("sdot converged in %d iterations, residual %.3e", it, residual)
            return TransportSolution(w - w.min(), partition, cost, it, residual, dual, jac, history)
        if it == max_iters:
            break
        direction = np.zeros(n)
        if n > 1:
            reduced = jac[1:, 1:] + EPS_HESSIAN * identity(n - 1, format='csr')
            direction[1:] = spsolve(reduced.tocsc(), grad[1:])
        gnorm = np.linalg.norm(grad)
        t = 1.0
        reason = 'dual'
        while True:
            trial = w + t * direction
            t_part, t_areas, t_cost, t_dual = _evaluate(domain, points, trial, masses, tol, threads)
            if t_part.empty or t_areas.min() < floor:
                reason = 'empty'
            elif t_dual < dual - 1e-12 * (abs(dual) + 1.0):
                reason = 'dual'
            elif np.linalg.norm(t_areas - masses) > (1.0 - t / 2.0) * gnorm:
                reason = 'gradient'
            else:
                break
            t /= 2.0
            if t < MIN_STEP:
                partial = TransportSolution(w - w.min(), partition, cost, it, residual, dual, jac, history)
                if reason == 'empty':
                    raise EmptyCellUnrecoverable("damping cannot keep every cell nonempty")
                raise NonConvergence(f"line search stalled at residual {residual:.3e}", partial=partial)
        w, partition, areas, cost, dual = trial, t_part, t_areas, t_cost, t_dual
        history.append(dual)
        logger.debug("newton step %d: t=%g dual=%.15g", it, t, dual)
    partial = TransportSolution(w - w.min(), partition, cost, max_iters, residual, dual, None, history)
    raise NonConvergence(f"no convergence after {max_iters} Newton steps, residual {residual:.3e}",
                         partial=partial)


def _grid_samples(domain: DomainSpec, grid_n: int):
    xmin, ymin, xmax, ymax = domain.bounding_box()
    hx, hy = (xmax - xmin) / grid_n, (ymax - ymin) / grid_n
    xs = xmin + hx * (np.arange(grid_n) + 0.5)
    ys = ymin + hy * (np.arange(grid_n) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing='ij')
    samples = np.column_stack([gx.ravel(), gy.ravel()])
    if not domain.is_torus:
        inside = np.ones(len(samples), dtype=bool)
        for h in geometry.domain_halfplanes(domain.scaled):
            inside &= h.value(samples) <= 0.0
        samples = samples[inside]
    return samples, hx, hy


def brute_force_ot(domain: DomainSpec, measure: AtomicMeasure, grid_n: int) -> float:
    """Exact discrete transport from a grid of equal-mass samples onto the atoms."""
    if grid_n > 400 or measure.n > 8:
        raise InstanceTooLarge(f"brute force limited to grid_n <= 400 and 8 sites, got {grid_n}, {measure.n}")
    samples, hx, hy = _grid_samples(domain, grid_n)
    a = np.full(len(samples), domain.area / len(samples))
    b = measure.masses * (a.sum() / measure.total)
    diff = samples[:, None, :] - measure.points[None, :, :]
    if domain.is_torus:
        per = np.asarray(domain.periods)
        diff = diff - per * np.round(diff / per)
    cost = (diff ** 2).sum(axis=2)
    value = float(ot.emd2(a, b, cost, numItermax=10_000_000))
    # each sample stands for a pixel; add the pixel's own second moment
    return value + domain.area * (hx * hx + hy * hy) / 12.0
