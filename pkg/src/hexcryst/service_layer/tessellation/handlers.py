import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from hexcryst.domain import geometry
from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.errors import CellTooLarge, InvalidGeometry
from hexcryst.domain.geometry import ConvexPolygon, HalfPlane, TOL_GEOM
from hexcryst.domain.measure import CellPartition, NeighborGraph, SharedEdge, WeightedSites

logger = logging.getLogger(__name__)

_SHIFTS = [(sx, sy) for sx in (-1, 0, 1) for sy in (-1, 0, 1)]
_CENTER = _SHIFTS.index((0, 0))
_RING2 = [(sx, sy) for sx in range(-2, 3) for sy in range(-2, 3) if max(abs(sx), abs(sy)) == 2]


def _clip_cell(start: ConvexPolygon, zi: np.ndarray, li: float, pts: np.ndarray, w: np.ndarray,
               labels: Sequence[int], skip: int, tol: float) -> Optional[ConvexPolygon]:
    """Cuts ``start`` by the power bisectors of site i against every other site, nearest first."""
    d = np.hypot(pts[:, 0] - zi[0], pts[:, 1] - zi[1])
    order = np.argsort(d, kind='stable')
    w_min = float(w.min())
    cell = start
    for idx in order:
        if idx == skip:
            continue
        rho = float(np.max(np.hypot(cell.vertices[:, 0] - zi[0], cell.vertices[:, 1] - zi[1])))
        if d[idx] >= rho and (d[idx] - rho) ** 2 + w_min >= rho ** 2 + li:
            break
        cell = geometry.clip(cell, HalfPlane.power_bisector(zi, pts[idx], li, w[idx], labels[idx]), tol)
        if cell is None:
            return None
    return cell


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _collect_edges(cells: Sequence[Optional[ConvexPolygon]], decode, tol: float):
    lengths: Dict[Tuple[int, int, Tuple[int, int]], List[float]] = defaultdict(list)
    boundary = []
    for i, cell in enumerate(cells):
        touches = False
        if cell is not None:
            for p, q, label in cell.edges():
                length = float(np.hypot(*(q - p)))
                if length <= tol:
                    continue
                if label < 0:
                    touches = True
                    continue
                j, shift = decode(label)
                if j < i or (j == i and shift < (0, 0)):
                    key = (j, i, (-shift[0], -shift[1]))
                else:
                    key = (i, j, shift)
                lengths[key].append(length)
        boundary.append(touches)
    edges = tuple(SharedEdge(i, j, float(np.mean(ls)), shift)
                  for (i, j, shift), ls in sorted(lengths.items()))
    return edges, tuple(boundary)


def power_diagram(domain: DomainSpec, sites: WeightedSites, tol: float = TOL_GEOM,
                  threads: int = 1) -> CellPartition:
    """Builds the power diagram of weighted sites clipped to a polygonal domain."""
    if domain.is_torus:
        return power_diagram_periodic(domain, sites, tol=tol, threads=threads)
    pts, w = sites.points, sites.weights
    labels = list(range(sites.n))
    start = domain.scaled

    def build(i):
        return _clip_cell(start, pts[i], w[i], pts, w, labels, i, tol)

    cells = _map(build, range(sites.n), threads)
    edges, boundary = _collect_edges(cells, lambda label: (label, (0, 0)), tol)
    logger.debug("power diagram: %d sites, %d empty cells, %d shared edges",
                 sites.n, sum(c is None for c in cells), len(edges))
    return CellPartition(tuple(cells), sites, edges, boundary)


def _check_periodic_cell(i: int, cell: ConvexPolygon, zi: np.ndarray, li: float,
                         pts: np.ndarray, w: np.ndarray, periods: np.ndarray, tol: float):
    if any(label < 0 for label in cell.edge_labels):
        raise CellTooLarge(f"cell {i} reaches the edge of the 3x3 image block")
    rho = np.hypot(cell.vertices[:, 0] - zi[0], cell.vertices[:, 1] - zi[1])
    if rho.max() < periods.min() / 2.0:
        return
    # exact test: no image in the next ring may cut the cell
    ring = np.concatenate([pts + periods * np.array(s) for s in _RING2])
    ring_w = np.tile(w, len(_RING2))
    own = ((cell.vertices - zi) ** 2).sum(axis=1) + li
    other = ((cell.vertices[:, None, :] - ring[None, :, :]) ** 2).sum(axis=2) + ring_w[None, :]
    if np.any(other < own[:, None] - tol):
        raise CellTooLarge(f"cell {i} is cut by a period image outside the 3x3 block")


def power_diagram_periodic(domain: DomainSpec, sites: WeightedSites, tol: float = TOL_GEOM,
                           threads: int = 1) -> CellPartition:
    """Power diagram on a flat torus from the 3x3 block of period images."""
    if not domain.is_torus:
        raise InvalidGeometry("power_diagram_periodic needs a torus domain")
    n = sites.n
    if n == 1:
        raise CellTooLarge("a single site's cell is the whole torus")
    periods = np.asarray(domain.periods)
    pts = domain.wrap(sites.points)
    w = sites.weights
    ext = np.concatenate([pts + periods * np.array(s) for s in _SHIFTS])
    ext_w = np.tile(w, len(_SHIFTS))
    labels = list(range(len(ext)))
    lx, ly = periods
    box = geometry.rectangle(3 * lx, 3 * ly, origin=(-lx, -ly))

    def build(i):
        cell = _clip_cell(box, pts[i], w[i], ext, ext_w, labels, _CENTER * n + i, tol)
        if cell is not None:
            _check_periodic_cell(i, cell, pts[i], w[i], pts, w, periods, tol)
        return cell

    cells = _map(build, range(n), threads)

    def decode(label):
        return label % n, _SHIFTS[label // n]

    edges, _ = _collect_edges(cells, decode, tol)
    relabelled = []
    for cell in cells:
        if cell is None:
            relabelled.append(None)
        else:
            relabelled.append(cell.relabel([lab % n for lab in cell.edge_labels]))
    logger.debug("periodic power diagram: %d sites, %d shared edges", n, len(edges))
    return CellPartition(tuple(relabelled), WeightedSites(pts, sites.weights), edges,
                         tuple(False for _ in cells), periods=(float(lx), float(ly)))


def adjacency_graph(partition: CellPartition) -> NeighborGraph:
    """Site pairs sharing an edge and per-site degree; an edge shared with an own image counts twice."""
    degree = np.zeros(partition.n, dtype=int)
    pairs = set()
    for e in partition.edges:
        degree[e.i] += 1
        degree[e.j] += 1
        if e.i != e.j:
            pairs.add((e.i, e.j))
    return NeighborGraph(tuple(sorted(pairs)), degree)


def voronoi_masses(domain: DomainSpec, points: np.ndarray, threads: int = 1) -> np.ndarray:
    """Areas of the unweighted Voronoi cells of the points."""
    return power_diagram(domain, WeightedSites.create(points), threads=threads).areas


def locate(partition: CellPartition, x: np.ndarray) -> np.ndarray:
    """Index of the power cell containing each sample point (minimal power distance)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pts = partition.points
    diff = x[:, None, :] - pts[None, :, :]
    if partition.periods is not None:
        per = np.asarray(partition.periods)
        diff = diff - per * np.round(diff / per)
    power = (diff ** 2).sum(axis=2) + partition.sites.weights[None, :]
    return power.argmin(axis=1)
