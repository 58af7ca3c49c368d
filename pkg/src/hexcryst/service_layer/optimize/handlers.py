"""Alternating minimization of the energy over positions, masses and point count."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree
from scipy.stats import qmc

from hexcryst.domain import geometry
from hexcryst.domain.constants import C6, CONSTANTS
from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.errors import InvalidParameter, NonConvergence, StepRejected
from hexcryst.domain.lattice import TriangularLattice
from hexcryst.domain.measure import AtomicMeasure, CellPartition, TransportSolution, WeightedSites
from hexcryst.domain.reports import EnergyReport
from hexcryst.service_layer.energy import handlers as energy
from hexcryst.service_layer.tessellation import handlers as tessellation

logger = logging.getLogger(__name__)

PROJECTED_GRADIENT = 'projected-gradient'
FIXED_POINT = 'fixed-point'
NO_MASS_UPDATE = 'none'
MASS_MODES = (PROJECTED_GRADIENT, FIXED_POINT, NO_MASS_UPDATE)


@dataclass
class MinimizerConfig:
    max_outer_iters: int = 500
    position_tol: float = 1e-9
    mass_tol: float = 1e-6
    mass_update: str = FIXED_POINT
    step: float = 1.0
    max_halvings: int = 12
    seed: int = 0
    starts: int = 1
    tol_mass: float = 1e-8
    floor_fraction: float = 1e-6
    delete_after: int = 3
    threads: int = 1

    def __post_init__(self):
        if self.mass_update not in MASS_MODES:
            raise InvalidParameter(f"mass_update must be one of {MASS_MODES}, got {self.mass_update!r}")
        if min(self.position_tol, self.mass_tol, self.step, self.tol_mass) <= 0:
            raise InvalidParameter("tolerances and step must be positive")
        if self.max_outer_iters < 0 or self.starts < 1:
            raise InvalidParameter("max_outer_iters must be >= 0 and starts >= 1")


@dataclass
class MinimizerState:
    domain: DomainSpec
    measure: AtomicMeasure
    solution: TransportSolution
    report: EnergyReport
    tol_mass: float = 1e-8
    threads: int = 1
    displacement: float = np.inf
    step: float = 1.0
    floor_hits: Optional[np.ndarray] = None

    @classmethod
    def start(cls, domain: DomainSpec, measure: AtomicMeasure, tol_mass: float = 1e-8,
              threads: int = 1, weights: Optional[np.ndarray] = None, step: float = 1.0) -> "MinimizerState":
        report, solution = energy.evaluate(domain, measure, tol_mass=tol_mass, weights=weights, threads=threads)
        return cls(domain, measure, solution, report, tol_mass, threads, step=step,
                   floor_hits=np.zeros(measure.n, dtype=int))

    @property
    def energy(self) -> float:
        return self.report.total

    @property
    def partition(self) -> CellPartition:
        return self.solution.partition

    def coupling(self) -> float:
        return energy.coupling_residual(self.measure.masses, self.solution.weights)[1]


@dataclass
class MinimizerResult:
    measure: AtomicMeasure
    partition: CellPartition
    report: EnergyReport
    history: List[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    seed: int = 0
    coupling_residual: float = np.inf
    max_displacement: float = np.inf
    rejected_steps: int = 0
    weights: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.measure.n


def lloyd_step(state: MinimizerState) -> MinimizerState:
    """Moves every site to its cell's centroid and re-solves the transport problem."""
    domain = state.domain
    old = state.partition.points
    centroids = np.array([geometry.centroid(c) for c in state.partition.cells])
    new = domain.wrap(centroids)
    displacement = float(np.max(np.linalg.norm(domain.displacement(old, new), axis=1)))
    measure = AtomicMeasure(new, state.measure.masses)
    report, solution = energy.evaluate(domain, measure, tol_mass=state.tol_mass,
                                       weights=state.solution.weights, threads=state.threads)
    return replace(state, measure=measure, solution=solution, report=report, displacement=displacement)


def project_masses(y: np.ndarray, total: float, floor: float) -> np.ndarray:
    """Euclidean projection onto {v >= floor, sum v = total}."""
    y = np.asarray(y, dtype=float)
    if len(y) == 1:
        return np.array([total])

    def excess(tau):
        return float(np.maximum(floor, y - tau).sum() - total)

    tau = brentq(excess, float(y.min()) - total, float(y.max()) - floor, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    v = np.maximum(floor, y - tau)
    return v * (total / v.sum())


def _mass_direction(state: MinimizerState, mode: str):
    masses = state.measure.masses
    # derivative of the energy in the masses; the transport part contributes -weights
    q = C6 / np.sqrt(masses) - state.solution.weights
    if mode == FIXED_POINT:
        # weight matching: the step that would restore weights = c6 v^{-1/2} + s for fixed sqrt term
        return q, -(state.solution.jacobian @ q)
    return q, -(q - q.mean())


def mass_update(state: MinimizerState, mode: str = FIXED_POINT, max_halvings: int = 12,
                floor_fraction: float = 1e-6, max_step: float = 1.0) -> MinimizerState:
    """Moves mass between cells along the stationarity direction; only energy decreases are accepted."""
    if mode == NO_MASS_UPDATE or state.measure.n == 1:
        return state
    total = state.domain.area
    floor = floor_fraction * total / state.measure.n
    q, direction = _mass_direction(state, mode)
    if abs(float(q @ direction)) * state.step <= 1e-15 * abs(state.energy):
        return state
    t = min(state.step, max_step)
    for _ in range(max_halvings + 1):
        masses = project_masses(state.measure.masses + t * direction, total, floor)
        measure = AtomicMeasure(state.measure.points, masses)
        try:
            report, solution = energy.evaluate(state.domain, measure, tol_mass=state.tol_mass,
                                               weights=state.solution.weights, threads=state.threads)
        except NonConvergence:
            report = None
        if report is not None and report.total < state.energy:
            hits = np.where(masses <= floor * (1 + 1e-9), state.floor_hits + 1, 0)
            return replace(state, measure=measure, solution=solution, report=report,
                           step=min(2.0 * t, max_step), floor_hits=hits)
        t /= 2.0
    raise StepRejected(f"no mass step decreased the energy (last t={t:.3g})")


def _delete_floored(state: MinimizerState, delete_after: int) -> MinimizerState:
    doomed = np.flatnonzero(state.floor_hits >= delete_after)
    if len(doomed) == 0 or len(doomed) == state.measure.n:
        return state
    keep = np.setdiff1d(np.arange(state.measure.n), doomed)
    logger.warning("deleting %d points stuck at the mass floor", len(doomed))
    masses = state.measure.masses[keep]
    measure = AtomicMeasure(state.measure.points[keep], masses * (state.domain.area / masses.sum()))
    return MinimizerState.start(state.domain, measure, state.tol_mass, state.threads,
                                weights=state.solution.weights[keep], step=state.step)


def halton_points(domain: DomainSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Scrambled Halton points inside the domain."""
    sampler = qmc.Halton(d=2, scramble=True, seed=rng)
    xmin, ymin, xmax, ymax = domain.bounding_box()
    accepted: List[np.ndarray] = []
    while sum(len(a) for a in accepted) < n:
        batch = qmc.scale(sampler.random(max(2 * n, 16)), [xmin, ymin], [xmax, ymax])
        if not domain.is_torus:
            inside = np.ones(len(batch), dtype=bool)
            for h in geometry.domain_halfplanes(domain.scaled):
                inside &= h.value(batch) < -1e-9
            batch = batch[inside]
        accepted.append(batch)
    return np.concatenate(accepted)[:n]


def rng_for(seed: int, start: int = 0) -> np.random.Generator:
    """Counter-based stream for one start of one seed."""
    return np.random.Generator(np.random.Philox(seed).jumped(start))


def _run(domain: DomainSpec, measure: AtomicMeasure, config: MinimizerConfig, seed: int,
         weights: Optional[np.ndarray] = None) -> MinimizerResult:
    state = MinimizerState.start(domain, measure, config.tol_mass, config.threads, weights=weights,
                                 step=config.step)
    history = [state.energy]
    rejected = 0
    converged = False
    it = 0
    for it in range(1, config.max_outer_iters + 1):
        state = lloyd_step(state)
        try:
            state = mass_update(state, config.mass_update, config.max_halvings, config.floor_fraction,
                                config.step)
        except StepRejected as exc:
            rejected += 1
            logger.debug("outer iteration %d: %s", it, exc)
        state = _delete_floored(state, config.delete_after)
        history.append(state.energy)
        coupling = state.coupling() if config.mass_update != NO_MASS_UPDATE else 0.0
        logger.debug("outer iteration %d: E=%.15g move=%.3e coupling=%.3e",
                     it, state.energy, state.displacement, coupling)
        if state.displacement < config.position_tol and coupling < config.mass_tol:
            converged = True
            break
    coupling = state.coupling()
    if converged:
        logger.info("minimizer converged after %d iterations: E=%.12g, d=%.3e, n=%d",
                    it, state.energy, state.report.defect, state.measure.n)
    else:
        logger.warning("minimizer stopped after %d iterations without converging (move %.3e)",
                       it, state.displacement)
    return MinimizerResult(state.measure, state.partition, state.report, history, converged, it, seed,
                           coupling, state.displacement, rejected, state.solution.weights)


def _better(a: MinimizerResult, b: Optional[MinimizerResult]) -> bool:
    if b is None:
        return True
    return (a.report.total, a.n) < (b.report.total, b.n)


def minimize(domain: DomainSpec, n: int, config: Optional[MinimizerConfig] = None,
             initial: Optional[AtomicMeasure] = None,
             initial_weights: Optional[np.ndarray] = None) -> MinimizerResult:
    """Minimizes the energy over n-point measures, keeping the best of ``config.starts`` starts."""
    config = config or MinimizerConfig()
    if n < 1:
        raise InvalidParameter(f"need at least one point, got {n}")
    if initial is not None:
        return _run(domain, initial, config, config.seed, weights=initial_weights)

    def one(start):
        pts = halton_points(domain, n, rng_for(config.seed, start))
        return _run(domain, AtomicMeasure.on(domain, pts), config, config.seed + start)

    starts = range(config.starts)
    if config.threads > 1 and config.starts > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one, starts))
    else:
        results = [one(s) for s in starts]
    best = None
    for result in results:
        if _better(result, best):
            best = result
    return best


def _grow(domain: DomainSpec, result: MinimizerResult, n: int) -> np.ndarray:
    """Warm-start positions for n points from a previous result."""
    pts = result.measure.points.copy()
    order = np.argsort(-result.measure.masses)
    if n < len(pts):
        return pts[np.sort(order[:n])]
    extra = []
    for k in range(n - len(pts)):
        cell = result.partition.cells[order[k % len(order)]]
        c = np.asarray(geometry.centroid(cell))
        far = cell.vertices[np.argmax(np.linalg.norm(cell.vertices - c, axis=1))]
        extra.append(c + (0.35 + 0.1 * (k // len(order))) * (far - c))
    return domain.wrap(np.vstack([pts] + [np.array(extra)]))


def scan(domain: DomainSpec, n_values: Sequence[int], config: Optional[MinimizerConfig] = None) -> List[MinimizerResult]:
    """Minimizes for every point count in turn, warm-starting each from its predecessor."""
    config = config or MinimizerConfig()
    results: List[MinimizerResult] = []
    previous = None
    for n in n_values:
        if previous is None:
            result = minimize(domain, n, config)
        else:
            measure = AtomicMeasure.on(domain, _grow(domain, previous, n))
            result = minimize(domain, n, config, initial=measure)
        logger.info("scan n=%d: E=%.12g d=%.3e", n, result.report.total, result.report.defect)
        results.append(result)
        previous = result
    return results


def best_of(results: Sequence[MinimizerResult]) -> MinimizerResult:
    best = None
    for r in results:
        if _better(r, best):
            best = r
    return best


def _unique_mod(points: np.ndarray, periods: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    pts = np.mod(points, periods)
    pts[pts > periods - tol] -= periods[np.nonzero(pts > periods - tol)[1]]
    dupes = {j for i, j in cKDTree(pts).query_pairs(tol)}
    return pts[[k for k in range(len(pts)) if k not in dupes]]


class HexagonalTrial(NamedTuple):
    partition: CellPartition
    value: float
    boundary_cells: int = 0


def hexagonal_trial(domain: DomainSpec, offset: Sequence[float] = (0.0, 0.0),
                    rotation: float = 0.0) -> HexagonalTrial:
    """Crops the unit-area hexagonal tiling to the domain and returns its partition and F."""
    lattice = TriangularLattice(theta=rotation, translation=tuple(offset))
    if domain.is_torus:
        lx, ly = domain.periods
        pts = lattice.points_in_box(0.0, 0.0, lx, ly, margin=CONSTANTS.a)
        pts = _unique_mod(pts, np.array([lx, ly]))
        partition = tessellation.power_diagram_periodic(domain, WeightedSites.create(pts))
    else:
        pts = lattice.points_in_box(*domain.bounding_box(), margin=2 * CONSTANTS.hexagon_diameter)
        partition = tessellation.power_diagram(domain, WeightedSites.create(pts))
        kept = pts[[c is not None for c in partition.cells]]
        partition = tessellation.power_diagram(domain, WeightedSites.create(kept))
    return HexagonalTrial(partition, energy.partition_energy(domain, partition),
                          int(sum(partition.boundary_flags)))


def boundary_excess(domain: DomainSpec, value: float) -> float:
    """(F - 3 c6 V) per unit boundary length of the scaled domain."""
    return (value - 3.0 * C6 * domain.V) / domain.boundary_length


def trial_measure(domain: DomainSpec, partition: CellPartition) -> AtomicMeasure:
    """Measure with one atom of the cell's area at each cell centroid."""
    cells = [c for c in partition.cells if c is not None]
    pts = domain.wrap(np.array([geometry.centroid(c) for c in cells]))
    areas = np.array([geometry.area(c) for c in cells])
    return AtomicMeasure(pts, areas * (domain.area / areas.sum()))
