from dataclasses import dataclass, field
from typing import Any, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from hexcryst.domain import geometry
from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.errors import InvalidGeometry
from hexcryst.domain.geometry import ConvexPolygon, TOL_GEOM


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


def _check_points(points: np.ndarray, tol: float = TOL_GEOM):
    if points.ndim != 2 or points.shape[1] != 2 or len(points) == 0:
        raise InvalidGeometry("points must be a non-empty (n, 2) array")
    if not np.all(np.isfinite(points)):
        raise InvalidGeometry("points must be finite")
    if len(points) > 1 and cKDTree(points).query_pairs(tol):
        raise InvalidGeometry("sites must be pairwise distinct")


@dataclass(frozen=True, eq=False)
class WeightedSites:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        _check_points(self.points)
        if self.weights.shape != (len(self.points),) or not np.all(np.isfinite(self.weights)):
            raise InvalidGeometry("one finite weight per site is required")

    @classmethod
    def create(cls, points: Sequence[Sequence[float]],
               weights: Optional[Sequence[float]] = None) -> "WeightedSites":
        pts = _frozen(points)
        w = np.zeros(len(pts)) if weights is None else weights
        return cls(pts, _frozen(w))

    @property
    def n(self) -> int:
        return len(self.points)

    def normalized(self) -> "WeightedSites":
        """Same diagram, weights shifted so that the smallest is zero."""
        return WeightedSites(self.points, _frozen(self.weights - self.weights.min()))


class SharedEdge(NamedTuple):
    i: int
    j: int
    length: float
    # period offset of the image of j that i touches, (0, 0) in the plane
    shift: Tuple[int, int] = (0, 0)


class NeighborGraph(NamedTuple):
    pairs: Tuple[Tuple[int, int], ...]
    degree: np.ndarray


@dataclass(frozen=True, eq=False)
class CellPartition:
    cells: Tuple[Optional[ConvexPolygon], ...]
    sites: WeightedSites
    edges: Tuple[SharedEdge, ...]
    boundary_flags: Tuple[bool, ...]
    periods: Optional[Tuple[float, float]] = None

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def points(self) -> np.ndarray:
        return self.sites.points

    @property
    def areas(self) -> np.ndarray:
        return np.array([0.0 if c is None else geometry.area(c) for c in self.cells])

    @property
    def empty(self) -> List[int]:
        return [i for i, c in enumerate(self.cells) if c is None]

    @property
    def adjacency(self) -> List[Tuple[int, int]]:
        return sorted({(min(e.i, e.j), max(e.i, e.j)) for e in self.edges})

    def edge_counts(self) -> np.ndarray:
        return np.array([0 if c is None else geometry.edge_count(c) for c in self.cells])


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        _check_points(self.points)
        if self.masses.shape != (len(self.points),):
            raise InvalidGeometry("one mass per point is required")
        if not np.all(np.isfinite(self.masses)) or np.any(self.masses <= 0):
            raise InvalidGeometry("masses must be positive")

    @classmethod
    def create(cls, points: Sequence[Sequence[float]], masses: Sequence[float]) -> "AtomicMeasure":
        return cls(_frozen(points), _frozen(masses))

    @classmethod
    def on(cls, domain: DomainSpec, points: Sequence[Sequence[float]],
           masses: Optional[Sequence[float]] = None, rtol: float = 1e-8) -> "AtomicMeasure":
        """A measure whose total mass matches the domain area; equal masses when none are given."""
        pts = domain.wrap(np.asarray(points, dtype=float))
        if masses is None:
            masses = np.full(len(pts), domain.area / len(pts))
        measure = cls(_frozen(pts), _frozen(masses))
        if abs(measure.total - domain.area) > rtol * domain.area:
            raise InvalidGeometry(f"total mass {measure.total!r} differs from domain area {domain.area!r}")
        outside = [i for i, p in enumerate(pts) if not domain.contains(p)]
        if outside:
            raise InvalidGeometry(f"points {outside[:5]} lie outside the domain")
        return measure

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def __repr__(self):
        return f'<AtomicMeasure {self.n} points, mass {self.total:.6g}>'


@dataclass
class TransportSolution:
    weights: np.ndarray
    partition: CellPartition
    cost: float
    iterations: int
    residual: float
    dual: float = 0.0
    # negative Hessian of the dual, i.e. the Jacobian of -areas in the weights
    jacobian: Optional[Any] = None
    history: List[float] = field(default_factory=list)
