"""Named constants of the hexagonal energy and the closed forms built on them."""
from dataclasses import dataclass
from typing import Union

import numpy as np

from hexcryst.domain.errors import InvalidParameter

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class Constants:
    c6: float = 5.0 * np.sqrt(3.0) / 54.0
    # d c_n / d n at n = 6, kept in closed form
    kappa: float = 2.0 * np.pi / 243.0 - 5.0 * np.sqrt(3.0) / 324.0
    xi: float = 0.001
    zeta: float = 0.001
    m1: float = 1.5e-4
    m0: float = 2.4095e-4
    R0: float = 3.2143
    # nearest-neighbour spacing of the unit-density triangular lattice
    a: float = np.sqrt(2.0) * 3.0 ** -0.25
    # circumradius of the unit-area regular hexagon
    r: float = np.sqrt(2.0) * 3.0 ** -0.75

    @property
    def D0(self) -> float:
        return 2.0 * np.sqrt(self.c6 * self.m0 ** -0.5 + self.R0 ** 2)

    @property
    def apothem(self) -> float:
        return self.a / 2.0

    @property
    def hexagon_diameter(self) -> float:
        return 2.0 * self.r


CONSTANTS = Constants()
C6 = CONSTANTS.c6


def cn(n: ArrayLike) -> ArrayLike:
    """Minimal polar second moment of a unit-area n-gon (n may be non-integer)."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 3):
        raise InvalidParameter(f"c_n needs n >= 3, got {n}")
    theta = np.pi / n_arr
    value = (np.tan(theta) / 3.0 + 1.0 / np.tan(theta)) / (2.0 * n_arr)
    return float(value) if np.ndim(value) == 0 else value


def f(v: ArrayLike, n: ArrayLike) -> ArrayLike:
    """Per-cell lower bound 2 c6 sqrt(v) + c_n v^2."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise InvalidParameter("cell mass must be nonnegative")
    value = 2.0 * C6 * np.sqrt(v_arr) + cn(n) * v_arr ** 2
    return float(value) if np.ndim(value) == 0 else value


def v_lambda(lam: float) -> float:
    if lam <= 0:
        raise InvalidParameter(f"lambda must be positive, got {lam}")
    return (2.0 * C6 / lam) ** (2.0 / 3.0)


def lambda_for_volume(volume: float) -> float:
    """Inverse of v_lambda."""
    if volume <= 0:
        raise InvalidParameter(f"volume must be positive, got {volume}")
    return 2.0 * C6 / volume ** 1.5


def hessian_det_g(v: ArrayLike, n: ArrayLike) -> ArrayLike:
    """Closed-form determinant of the Hessian of g(v, n) = v^2 c_n, n continuous."""
    n_arr = np.asarray(n, dtype=float)
    value = 8.0 * np.pi ** 2 * np.asarray(v, dtype=float) ** 2 / (np.cos(np.pi / n_arr) ** 2 * 9.0 * n_arr ** 6)
    return float(value) if np.ndim(value) == 0 else value


def convexity_gap(v: ArrayLike, n: ArrayLike, consts: Constants = CONSTANTS) -> ArrayLike:
    """f(v,n) - 3 c6 v + kappa (6-n) - xi (v-1)^2 - zeta (1/n - 1/6)^2; nonnegative for v >= m1."""
    v_arr = np.asarray(v, dtype=float)
    n_arr = np.asarray(n, dtype=float)
    value = (f(v_arr, n_arr) - 3.0 * consts.c6 * v_arr + consts.kappa * (6.0 - n_arr)
             - consts.xi * (v_arr - 1.0) ** 2 - consts.zeta * (1.0 / n_arr - 1.0 / 6.0) ** 2)
    return float(value) if np.ndim(value) == 0 else value


def hextrial_constant(eta: float = 0.0) -> float:
    """Boundary constant of the cropped hexagonal tiling, 2^{5/2} 3^{1/4} c6 (1 + eta)."""
    return 2.0 ** 2.5 * 3.0 ** 0.25 * C6 * (1.0 + eta)
