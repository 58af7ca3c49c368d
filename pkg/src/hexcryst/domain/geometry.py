"""Convex polygons and the half-plane arithmetic the power diagrams are built from.

Every polygon carries one integer label per edge. Edge ``k`` runs from vertex ``k``
to vertex ``k + 1``. A label ``j >= 0`` names the site whose bisector produced the
edge, a label ``-(s + 1)`` names side ``s`` of the domain polygon.
"""
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from hexcryst.domain.errors import InvalidGeometry

TOL_GEOM = 1e-9
NO_LABEL = -(10 ** 9)


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class HalfPlane:
    """The set {x : normal . x <= offset}."""
    normal: Tuple[float, float]
    offset: float
    label: int = NO_LABEL

    def __post_init__(self):
        norm = float(np.hypot(*self.normal))
        if not np.isfinite(self.offset) or abs(norm - 1.0) > TOL_GEOM:
            raise InvalidGeometry(f"half-plane normal must be a unit vector, got {self.normal}")

    def value(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ np.asarray(self.normal) - self.offset

    def contains(self, point: Sequence[float], tol: float = TOL_GEOM) -> bool:
        return float(self.value(np.asarray(point, dtype=float))) <= tol

    def complement(self) -> "HalfPlane":
        return HalfPlane((-self.normal[0], -self.normal[1]), -self.offset, self.label)

    @classmethod
    def power_bisector(cls, zi: Sequence[float], zj: Sequence[float],
                       li: float = 0.0, lj: float = 0.0, label: int = NO_LABEL) -> "HalfPlane":
        """Points no farther (in power distance) from site i than from site j."""
        zi = np.asarray(zi, dtype=float)
        diff = np.asarray(zj, dtype=float) - zi
        dist = float(np.hypot(*diff))
        if dist <= TOL_GEOM:
            raise InvalidGeometry("coincident sites have no bisector")
        normal = diff / dist
        # measured from zi to keep the offset well conditioned far from the origin
        offset = float(normal @ zi) + (dist * dist + lj - li) / (2.0 * dist)
        return cls((float(normal[0]), float(normal[1])), offset, label)


def _signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _dedup(vertices: List[np.ndarray], labels: List[int], tol: float):
    """Drops zero-length edges; the surviving edge keeps the later label."""
    changed = True
    while changed and len(vertices) > 1:
        changed = False
        m = len(vertices)
        for k in range(m):
            nxt = (k + 1) % m
            if np.hypot(*(vertices[k] - vertices[nxt])) <= tol:
                del vertices[k]
                del labels[k]
                changed = True
                break
    return vertices, labels


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    vertices: np.ndarray
    edge_labels: Tuple[int, ...]

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]], labels: Optional[Sequence[int]] = None,
                    tol: float = TOL_GEOM, validate: bool = True) -> "ConvexPolygon":
        verts = [np.asarray(p, dtype=float) for p in points]
        labs = list(labels) if labels is not None else [NO_LABEL] * len(verts)
        if len(labs) != len(verts):
            raise InvalidGeometry("one label per edge is required")
        if any(v.shape != (2,) or not np.all(np.isfinite(v)) for v in verts):
            raise InvalidGeometry("vertices must be finite planar points")
        verts, labs = _dedup(verts, labs, tol)
        if len(verts) < 3:
            raise InvalidGeometry(f"a polygon needs at least 3 distinct vertices, got {len(verts)}")
        arr = np.array(verts)
        if _signed_area(arr) < 0:
            m = len(arr)
            labs = [labs[(m - 2 - i) % m] for i in range(m)]
            arr = arr[::-1].copy()
        if validate:
            if _signed_area(arr) <= tol:
                raise InvalidGeometry("polygon area must be positive")
            edges = np.roll(arr, -1, axis=0) - arr
            nxt = np.roll(edges, -1, axis=0)
            cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
            lengths = np.hypot(edges[:, 0], edges[:, 1]) * np.hypot(nxt[:, 0], nxt[:, 1])
            if np.any(cross < -tol * np.maximum(lengths, 1.0)):
                raise InvalidGeometry("polygon is not convex")
        arr.setflags(write=False)
        return cls(arr, tuple(int(lab) for lab in labs))

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self):
        return f'<ConvexPolygon {len(self)} vertices, area {area(self):.6g}>'

    def edges(self) -> List[Tuple[np.ndarray, np.ndarray, int]]:
        nxt = np.roll(self.vertices, -1, axis=0)
        return [(self.vertices[k], nxt[k], self.edge_labels[k]) for k in range(len(self))]

    def relabel(self, labels: Sequence[int]) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices, tuple(int(lab) for lab in labels))


def clip(poly: ConvexPolygon, h: HalfPlane, tol: float = TOL_GEOM) -> Optional[ConvexPolygon]:
    """Intersects a polygon with a half-plane; None when nothing of positive area is left."""
    s = h.value(poly.vertices)
    if np.all(s <= tol):
        return poly
    if np.all(s > -tol):
        return None
    m = len(poly)
    out_v: List[np.ndarray] = []
    out_l: List[int] = []
    for k in range(m):
        nxt = (k + 1) % m
        p, q = poly.vertices[k], poly.vertices[nxt]
        sp, sq = s[k], s[nxt]
        p_in, q_in = sp <= tol, sq <= tol
        if p_in:
            out_v.append(p)
            out_l.append(poly.edge_labels[k])
            if not q_in:
                out_v.append(p + (sp / (sp - sq)) * (q - p))
                out_l.append(h.label)
        elif q_in:
            out_v.append(p + (sp / (sp - sq)) * (q - p))
            out_l.append(poly.edge_labels[k])
    out_v, out_l = _dedup(out_v, out_l, tol)
    if len(out_v) < 3 or abs(_signed_area(np.array(out_v))) < tol:
        return None
    return ConvexPolygon.from_points(out_v, out_l, tol=tol, validate=False)


def area(poly: ConvexPolygon) -> float:
    return _signed_area(poly.vertices)


def perimeter(poly: ConvexPolygon) -> float:
    edges = np.roll(poly.vertices, -1, axis=0) - poly.vertices
    return float(np.hypot(edges[:, 0], edges[:, 1]).sum())


def centroid(poly: ConvexPolygon) -> Point:
    # shifted to the first vertex to avoid cancellation far from the origin
    origin = poly.vertices[0]
    v = poly.vertices - origin
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    a = cross.sum() / 2.0
    cx = ((v[:, 0] + w[:, 0]) * cross).sum() / (6.0 * a)
    cy = ((v[:, 1] + w[:, 1]) * cross).sum() / (6.0 * a)
    return Point(float(cx + origin[0]), float(cy + origin[1]))


def second_moment(poly: ConvexPolygon, ref: Sequence[float]) -> float:
    """Polar second moment of the polygon about ``ref``, exact via the triangle fan from ``ref``."""
    a = poly.vertices - np.asarray(ref, dtype=float)
    b = np.roll(a, -1, axis=0)
    tri_area = 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    dots = (a * a).sum(axis=1) + (b * b).sum(axis=1) + (a * b).sum(axis=1)
    return float((tri_area * dots).sum() / 6.0)


def min_second_moment(poly: ConvexPolygon) -> Tuple[Point, float]:
    c = centroid(poly)
    return c, second_moment(poly, c)


def diameter(poly: ConvexPolygon) -> float:
    return float(pdist(poly.vertices).max())


def edge_count(poly: ConvexPolygon, tol: float = TOL_GEOM) -> int:
    edges = np.roll(poly.vertices, -1, axis=0) - poly.vertices
    return int(np.count_nonzero(np.hypot(edges[:, 0], edges[:, 1]) > tol))


def contains(poly: ConvexPolygon, point: Sequence[float], tol: float = TOL_GEOM) -> bool:
    p = np.asarray(point, dtype=float)
    a = poly.vertices
    b = np.roll(a, -1, axis=0)
    e = b - a
    lengths = np.hypot(e[:, 0], e[:, 1])
    cross = (e[:, 0] * (p[1] - a[:, 1]) - e[:, 1] * (p[0] - a[:, 0])) / lengths
    return bool(np.all(cross >= -tol))


def translate(poly: ConvexPolygon, t: Sequence[float]) -> ConvexPolygon:
    return ConvexPolygon.from_points(poly.vertices + np.asarray(t, dtype=float), poly.edge_labels, validate=False)


def scale(poly: ConvexPolygon, factor: float, about: Sequence[float] = (0.0, 0.0)) -> ConvexPolygon:
    c = np.asarray(about, dtype=float)
    return ConvexPolygon.from_points(c + factor * (poly.vertices - c), poly.edge_labels, validate=False)


def rotate(poly: ConvexPolygon, angle: float, about: Sequence[float] = (0.0, 0.0)) -> ConvexPolygon:
    c = np.asarray(about, dtype=float)
    cs, sn = np.cos(angle), np.sin(angle)
    rot = np.array([[cs, -sn], [sn, cs]])
    return ConvexPolygon.from_points(c + (poly.vertices - c) @ rot.T, poly.edge_labels, validate=False)


def regular_polygon(n: int, area_: float = 1.0, center: Sequence[float] = (0.0, 0.0),
                    rotation: float = 0.0) -> ConvexPolygon:
    """Regular n-gon of the given area, first vertex at angle ``rotation`` from the center."""
    if n < 3:
        raise InvalidGeometry(f"a regular polygon needs n >= 3, got {n}")
    radius = np.sqrt(2.0 * area_ / (n * np.sin(2.0 * np.pi / n)))
    angles = rotation + 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack([np.cos(angles), np.sin(angles)]) * radius + np.asarray(center, dtype=float)
    return ConvexPolygon.from_points(pts, [-(k + 1) for k in range(n)])


def disk_approx(k: int, area_: float = 1.0) -> ConvexPolygon:
    """Regular k-gon standing on an edge, a polygonal stand-in for the disk."""
    return regular_polygon(k, area_, rotation=np.pi / k)


def rectangle(width: float, height: float, origin: Sequence[float] = (0.0, 0.0)) -> ConvexPolygon:
    x0, y0 = origin
    return ConvexPolygon.from_points(
        [(x0, y0), (x0 + width, y0), (x0 + width, y0 + height), (x0, y0 + height)],
        [-1, -2, -3, -4])


def domain_halfplanes(poly: ConvexPolygon) -> List[HalfPlane]:
    """The polygon as an intersection of half-planes, labelled by side."""
    planes = []
    for k, (p, q, _) in enumerate(poly.edges()):
        e = q - p
        length = float(np.hypot(*e))
        normal = (float(e[1] / length), float(-e[0] / length))
        planes.append(HalfPlane(normal, float(np.dot(normal, p)), -(k + 1)))
    return planes
