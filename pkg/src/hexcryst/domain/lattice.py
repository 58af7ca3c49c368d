from dataclasses import dataclass
from typing import Tuple

import numpy as np

from hexcryst.domain.constants import CONSTANTS

# columns are the basis vectors; unit determinant, spacing 2 * 12^{-1/4}
GENERATOR = 12.0 ** -0.25 * np.array([[2.0, 1.0], [0.0, np.sqrt(3.0)]])
_CORNERS = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])


@dataclass(frozen=True)
class TriangularLattice:
    """Rotated, translated and optionally rescaled copy of the unit-density triangular lattice."""
    theta: float = 0.0
    translation: Tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0

    @property
    def matrix(self) -> np.ndarray:
        cs, sn = np.cos(self.theta), np.sin(self.theta)
        return self.scale * np.array([[cs, -sn], [sn, cs]]) @ GENERATOR

    @property
    def spacing(self) -> float:
        return self.scale * CONSTANTS.a

    @property
    def density(self) -> float:
        return 1.0 / abs(np.linalg.det(self.matrix))

    def site(self, i: int, j: int) -> np.ndarray:
        return self.matrix @ np.array([i, j], dtype=float) + np.asarray(self.translation)

    def coordinates(self, points: np.ndarray) -> np.ndarray:
        """Fractional lattice coordinates of planar points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.translation)
        return np.linalg.solve(self.matrix, pts.T).T

    def points_in_box(self, xmin: float, ymin: float, xmax: float, ymax: float,
                      margin: float = 0.0) -> np.ndarray:
        """All lattice sites in the box grown by ``margin``."""
        lo = np.array([xmin - margin, ymin - margin])
        hi = np.array([xmax + margin, ymax + margin])
        corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]])
        frac = self.coordinates(corners)
        i_lo, j_lo = np.floor(frac.min(axis=0)).astype(int) - 1
        i_hi, j_hi = np.ceil(frac.max(axis=0)).astype(int) + 1
        ii, jj = np.meshgrid(np.arange(i_lo, i_hi + 1), np.arange(j_lo, j_hi + 1), indexing='ij')
        idx = np.column_stack([ii.ravel(), jj.ravel()]).astype(float)
        pts = idx @ self.matrix.T + np.asarray(self.translation)
        keep = np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=1)
        return pts[keep]

    def nearest(self, points: np.ndarray) -> np.ndarray:
        """Nearest lattice site of every point; it is a corner of the enclosing rhombus."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        base = np.floor(self.coordinates(pts))
        cand = (base[:, None, :] + _CORNERS[None, :, :]) @ self.matrix.T + np.asarray(self.translation)
        dist = np.linalg.norm(cand - pts[:, None, :], axis=2)
        return cand[np.arange(len(pts)), dist.argmin(axis=1)]

    def residuals(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(pts - self.nearest(pts), axis=1)
