import logging
from typing import Optional, Tuple

import numpy as np

from hexcryst.domain import geometry
from hexcryst.domain.constants import C6, f
from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.errors import InvalidParameter
from hexcryst.domain.measure import AtomicMeasure, CellPartition, TransportSolution
from hexcryst.domain.reports import CellRecord, EnergyReport
from hexcryst.service_layer.transport import handlers as transport

logger = logging.getLogger(__name__)


def solver_slack(domain: DomainSpec, tol_mass: float = 1e-8) -> float:
    """Energy tolerance for inequalities checked against converged transport solutions."""
    return 10.0 * tol_mass * domain.V


def surface_energy(masses: np.ndarray) -> float:
    return 2.0 * C6 * float(np.sqrt(np.asarray(masses, dtype=float)).sum())


def report_from_solution(domain: DomainSpec, measure: AtomicMeasure, solution: TransportSolution) -> EnergyReport:
    """Assembles the energy report of a measure from its converged transport solution."""
    partition = solution.partition
    surface = surface_energy(measure.masses)
    total = surface + solution.cost
    cells = []
    for i, cell in enumerate(partition.cells):
        x, y = partition.points[i]
        edges = geometry.edge_count(cell)
        _, inertia = geometry.min_second_moment(cell)
        cells.append(CellRecord(
            index=i, x=float(x), y=float(y), mass=float(measure.masses[i]),
            weight=float(solution.weights[i]), edges=edges,
            cost=geometry.second_moment(cell, partition.points[i]), second_moment=inertia,
            lower_bound=f(measure.masses[i], edges), boundary=partition.boundary_flags[i]))
    return EnergyReport(surface=surface, transport=solution.cost, total=total, V_lambda=domain.V,
                        defect=total / domain.V - 3.0 * C6, cells=cells)


def evaluate(domain: DomainSpec, measure: AtomicMeasure, tol_mass: float = 1e-8,
             weights: Optional[np.ndarray] = None, threads: int = 1) -> Tuple[EnergyReport, TransportSolution]:
    """Solves the transport problem and reports the energy together with the solution."""
    solution = transport.solve_sdot(domain, measure, tol_mass=tol_mass, weights=weights, threads=threads)
    report = report_from_solution(domain, measure, solution)
    logger.debug("energy %.12g (surface %.12g, transport %.12g) for %d points",
                 report.total, report.surface, report.transport, measure.n)
    return report, solution


def energy(domain: DomainSpec, measure: AtomicMeasure, tol_mass: float = 1e-8, threads: int = 1) -> EnergyReport:
    """Evaluates E = 2 c6 sum sqrt(v) + W and the defect."""
    return evaluate(domain, measure, tol_mass=tol_mass, threads=threads)[0]


def partition_energy(domain: DomainSpec, partition: CellPartition, about: str = 'centroid') -> float:
    """Partition energy F: 2 c6 sqrt(|cell|) plus the cell's polar moment, about centroids or sites."""
    if about not in ('centroid', 'sites'):
        raise InvalidParameter(f"about must be 'centroid' or 'sites', got {about!r}")
    total = 0.0
    for i, cell in enumerate(partition.cells):
        if cell is None:
            continue
        if about == 'centroid':
            moment = geometry.min_second_moment(cell)[1]
        else:
            moment = geometry.second_moment(cell, partition.points[i])
        total += 2.0 * C6 * np.sqrt(geometry.area(cell)) + moment
    return float(total)


def cell_lower_bound_sum(report: EnergyReport) -> float:
    """Sum of f(v_i, n_i) over the cells of a report."""
    return float(sum(c.lower_bound for c in report.cells))


def coupling_residual(masses: np.ndarray, weights: np.ndarray) -> Tuple[float, float]:
    """Fits weights = c6 v^{-1/2} + s; returns the shift s and the max relative misfit."""
    target = C6 / np.sqrt(np.asarray(masses, dtype=float))
    shift = float(np.mean(np.asarray(weights) - target))
    misfit = np.abs(np.asarray(weights) - shift - target) / target
    return shift, float(misfit.max())
