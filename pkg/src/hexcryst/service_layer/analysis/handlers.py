import logging
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.spatial import cKDTree

from hexcryst.domain import geometry
from hexcryst.domain.constants import CONSTANTS
from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.errors import DegenerateFit
from hexcryst.domain.geometry import ConvexPolygon
from hexcryst.domain.lattice import TriangularLattice
from hexcryst.domain.measure import CellPartition
from hexcryst.domain.reports import StabilityReport
from hexcryst.service_layer.tessellation import handlers as tessellation

logger = logging.getLogger(__name__)

NOT_HEXAGON = float('inf')


class EulerCheck(NamedTuple):
    avg_edges: float
    bound: float
    passed: bool


class LatticeFit(NamedTuple):
    theta: float
    translation: np.ndarray
    rms: float
    lattice: TriangularLattice


def euler_check(partition: CellPartition, domain: DomainSpec) -> EulerCheck:
    """Average edge count of the nonempty cells against the Euler bound 6 - (6 - S)/n."""
    counts = [geometry.edge_count(c) for c in partition.cells if c is not None]
    n = len(counts)
    avg = float(np.mean(counts))
    bound = 6.0 if domain.is_torus else 6.0 - (6.0 - domain.sides) / n
    return EulerCheck(avg, bound, avg <= bound + 1e-12)


def hexagon_closeness(cell: ConvexPolygon) -> float:
    """Largest relative deviation of centroid-vertex and centroid-side distances from the unit regular hexagon."""
    if cell is None or geometry.edge_count(cell) != 6:
        return NOT_HEXAGON
    c = np.asarray(geometry.centroid(cell))
    s = geometry.area(cell) ** -0.5
    verts = cell.vertices - c
    nxt = np.roll(verts, -1, axis=0)
    edges = nxt - verts
    radial = s * np.hypot(verts[:, 0], verts[:, 1]) / CONSTANTS.r
    sides = s * np.abs(verts[:, 0] * edges[:, 1] - verts[:, 1] * edges[:, 0]) / np.hypot(edges[:, 0], edges[:, 1])
    sides = sides / CONSTANTS.apothem
    return float(max(np.abs(radial - 1.0).max(), np.abs(sides - 1.0).max()))


def lattice_fit(points: np.ndarray, scale: Optional[float] = 1.0) -> LatticeFit:
    """Fits a rotated and translated triangular lattice; ``scale=None`` estimates the spacing."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        raise DegenerateFit("need at least three points")
    tree = cKDTree(pts)
    k = min(7, len(pts))
    dist, idx = tree.query(pts, k=k)
    nearest = np.median(dist[:, 1])
    bonds = (dist[:, 1:] <= 1.25 * nearest) & (dist[:, 1:] > 0)
    vec = pts[idx[:, 1:]] - pts[:, None, :]
    angles = np.arctan2(vec[..., 1], vec[..., 0])[bonds]
    resultant = np.mean(np.exp(6j * angles))
    if abs(resultant) < 0.5:
        raise DegenerateFit(f"bond angles show no six-fold order (resultant {abs(resultant):.3f})")
    theta = float(np.mod(np.angle(resultant) / 6.0, np.pi / 3.0))
    if scale is None:
        scale = float(np.median(dist[:, 1:][bonds])) / CONSTANTS.a

    center = pts.mean(axis=0)
    anchors = np.argsort(np.linalg.norm(pts - center, axis=1))[:5]
    best = None
    for anchor in anchors:
        lattice = TriangularLattice(theta, tuple(pts[anchor]), scale)
        for _ in range(3):
            shift = (pts - lattice.nearest(pts)).mean(axis=0)
            lattice = TriangularLattice(theta, tuple(np.asarray(lattice.translation) + shift), scale)
        rms = float(np.sqrt(np.mean(lattice.residuals(pts) ** 2)))
        if best is None or rms < best.rms:
            best = LatticeFit(theta, np.asarray(lattice.translation), rms, lattice)
    logger.debug("lattice fit: theta=%.6f rad, rms=%.3e", best.theta, best.rms)
    return best


def neighbor_distances(partition: CellPartition) -> List[List[float]]:
    """Per site, the distances to the sites whose cells share an edge with it."""
    pts = partition.points
    per = np.zeros(2) if partition.periods is None else np.asarray(partition.periods)
    out: List[List[float]] = [[] for _ in range(partition.n)]
    for e in partition.edges:
        d = float(np.hypot(*(pts[e.j] + per * np.asarray(e.shift) - pts[e.i])))
        out[e.i].append(d)
        out[e.j].append(d)
    return out


def stability_report(result, domain: DomainSpec, tau: float = 0.05) -> StabilityReport:
    """Crystallinity diagnostics of a minimizer: closeness, good points, neighbour distances, Euler audit."""
    partition = result.partition
    closeness = [hexagon_closeness(c) for c in partition.cells]
    degree = tessellation.adjacency_graph(partition).degree
    spacing = CONSTANTS.a
    neighbors = neighbor_distances(partition)
    good = []
    for i, dists in enumerate(neighbors):
        rel = np.asarray(dists) / spacing
        good.append(bool(degree[i] == 6 and len(rel) == 6 and np.all(np.abs(rel - 1.0) <= tau)))
    good_arr = np.asarray(good)
    flags = np.asarray(partition.boundary_flags, dtype=bool)

    def defective(mask):
        return float(1.0 - good_arr[mask].mean()) if mask.any() else 0.0

    all_rel = np.concatenate([np.asarray(d) for d in neighbors if d] or [np.array([spacing])]) / spacing
    euler = euler_check(partition, domain)
    return StabilityReport(
        defect=result.report.defect, tau=tau, closeness=closeness, good=good,
        fraction_defective=defective(np.ones(len(good), dtype=bool)),
        interior_fraction_defective=defective(~flags),
        boundary_fraction_defective=defective(flags),
        neighbor_min=float(all_rel.min()), neighbor_max=float(all_rel.max()),
        neighbor_mean=float(all_rel.mean()),
        avg_edges=euler.avg_edges, euler_bound=euler.bound, euler_pass=euler.passed)
