from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from hexcryst.domain import geometry
from hexcryst.domain.constants import CONSTANTS, lambda_for_volume, v_lambda
from hexcryst.domain.errors import InvalidGeometry, InvalidParameter
from hexcryst.domain.geometry import ConvexPolygon

POLYGON = 'polygon'
TORUS = 'torus'


def normalize_area(poly: ConvexPolygon) -> ConvexPolygon:
    """Rescales a polygon about its centroid to unit area."""
    c = geometry.centroid(poly)
    return geometry.scale(poly, geometry.area(poly) ** -0.5, about=c)


def named_shape(name: str, sides: Optional[int] = None,
                vertices: Optional[Sequence[Sequence[float]]] = None) -> ConvexPolygon:
    """Unit-area base polygon for one of the named shapes."""
    if name == 'square':
        return geometry.rectangle(1.0, 1.0)
    if name == 'regular-hexagon':
        return geometry.regular_polygon(6)
    if name == 'regular-k-gon':
        if sides is None:
            raise InvalidParameter("regular-k-gon needs 'sides'")
        return geometry.regular_polygon(int(sides))
    if name == 'disk-approx':
        return geometry.disk_approx(int(sides or 64))
    if name == 'polygon':
        if not vertices:
            raise InvalidParameter("polygon needs 'vertices'")
        poly = ConvexPolygon.from_points(vertices)
        return normalize_area(poly.relabel([-(k + 1) for k in range(len(poly))]))
    raise InvalidParameter(f"unknown shape {name!r}")


@dataclass(frozen=True, eq=False)
class DomainSpec:
    kind: str
    lam: float
    base: Optional[ConvexPolygon] = None
    gamma: Optional[float] = None
    name: str = POLYGON

    def __post_init__(self):
        if self.lam <= 0 or not np.isfinite(self.lam):
            raise InvalidParameter(f"lambda must be positive, got {self.lam}")
        if self.kind == POLYGON:
            if self.base is None or abs(geometry.area(self.base) - 1.0) > 1e-9:
                raise InvalidGeometry("base domain must have unit area")
        elif self.kind == TORUS:
            if self.gamma is None or self.gamma <= 0:
                raise InvalidParameter("torus aspect gamma must be positive")
        else:
            raise InvalidParameter(f"unknown domain kind {self.kind!r}")

    def __repr__(self):
        return f'<DomainSpec {self.name} lambda={self.lam:.6g} V={self.V:.6g}>'

    @classmethod
    def polygon(cls, base: ConvexPolygon, lam: float, name: str = POLYGON) -> "DomainSpec":
        return cls(POLYGON, lam, base=base, name=name)

    @classmethod
    def torus(cls, gamma: float, lam: float, name: str = TORUS) -> "DomainSpec":
        return cls(TORUS, lam, gamma=gamma, name=name)

    @classmethod
    def from_periods(cls, lx: float, ly: float, name: str = TORUS) -> "DomainSpec":
        return cls.torus(np.sqrt(lx / ly), lambda_for_volume(lx * ly), name=name)

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    @cached_property
    def V(self) -> float:
        return v_lambda(self.lam)

    @cached_property
    def scaled(self) -> ConvexPolygon:
        if self.is_torus:
            raise InvalidGeometry("a torus has no polygon")
        return geometry.scale(self.base, self.V ** 0.5)

    @cached_property
    def periods(self) -> Tuple[float, float]:
        if not self.is_torus:
            raise InvalidGeometry("a polygon domain has no periods")
        root = self.V ** 0.5
        return root * self.gamma, root / self.gamma

    @property
    def area(self) -> float:
        if self.is_torus:
            lx, ly = self.periods
            return lx * ly
        return geometry.area(self.scaled)

    @property
    def boundary_length(self) -> float:
        return 0.0 if self.is_torus else geometry.perimeter(self.scaled)

    @property
    def sides(self) -> int:
        return 0 if self.is_torus else geometry.edge_count(self.base)

    def bounding_box(self) -> Tuple[float, float, float, float]:
        if self.is_torus:
            lx, ly = self.periods
            return 0.0, 0.0, lx, ly
        v = self.scaled.vertices
        return float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max())

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Reduces points into the fundamental cell; identity on polygon domains."""
        pts = np.asarray(points, dtype=float)
        if not self.is_torus:
            return pts
        return np.mod(pts, np.asarray(self.periods))

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """b - a, reduced to the minimal image on a torus."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.is_torus:
            per = np.asarray(self.periods)
            d = d - per * np.round(d / per)
        return d

    def contains(self, point: Sequence[float], tol: float = geometry.TOL_GEOM) -> bool:
        if self.is_torus:
            return True
        return geometry.contains(self.scaled, point, tol)


def commensurate_torus(k: int, m: int) -> DomainSpec:
    """Torus of k x m rectangular lattice periods; holds 2km points of the triangular lattice."""
    a = CONSTANTS.a
    return DomainSpec.from_periods(k * a, m * a * np.sqrt(3.0), name=f'commensurate-torus-{k}x{m}')


def domain_from_shape(name: str, lam: float, sides: Optional[int] = None,
                      vertices: Optional[Sequence[Sequence[float]]] = None,
                      gamma: Optional[float] = None, k: Optional[int] = None,
                      m: Optional[int] = None) -> DomainSpec:
    if name == 'torus':
        return DomainSpec.torus(gamma if gamma is not None else 1.0, lam)
    if name == 'commensurate-torus':
        return commensurate_torus(int(k or 1), int(m or k or 1))
    return DomainSpec.polygon(named_shape(name, sides, vertices), lam, name=name)


def boundary_tube_area(domain: DomainSpec, width: float) -> float:
    """Area of the points of the scaled domain closer than ``width`` to its boundary."""
    if domain.is_torus:
        return 0.0
    if width < 0:
        raise InvalidParameter(f"tube width must be nonnegative, got {width}")
    inner = domain.scaled
    for h in geometry.domain_halfplanes(domain.scaled):
        inner = geometry.clip(inner, geometry.HalfPlane(h.normal, h.offset - width, h.label))
        if inner is None:
            return domain.area
    return domain.area - geometry.area(inner)
