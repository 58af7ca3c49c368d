"""Runtime re-derivation of the constants and inequalities behind the crystallization bounds.

Every function returns a list of ``Check`` records; nothing here is random.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
import sympy as sp
from scipy import integrate, optimize, stats

from hexcryst.domain import geometry
from hexcryst.domain.constants import CONSTANTS, Constants, cn, convexity_gap, hessian_det_g, hextrial_constant
from hexcryst.domain.domain import DomainSpec, named_shape
from hexcryst.domain.errors import InvalidParameter
from hexcryst.domain.geometry import ConvexPolygon
from hexcryst.domain.lattice import TriangularLattice
from hexcryst.domain.reports import CertificateReport, Check

logger = logging.getLogger(__name__)

# reference discriminants of the quartics q_n, two significant figures
REFERENCE_DISCRIMINANTS = {3: -1.5e-3, 4: -2.0e-4, 5: -2.6e-5, 7: -1.3e-5}
REFERENCE_P8_DISCRIMINANT = -2.2e-5
REFERENCE_U6 = 0.0031
ROOT_CEILING = 0.012


def _check(name, computed, expected=None, tolerance=None, passed=None, detail='') -> Check:
    deviation = None
    if expected is not None and np.isscalar(computed):
        deviation = abs(float(computed) - float(expected))
        if passed is None and tolerance is not None:
            passed = deviation <= tolerance
    return Check(name=name, passed=bool(passed), computed=computed, expected=expected,
                 deviation=deviation, tolerance=tolerance, detail=detail)


def _half_unit(value: float) -> float:
    """Half a unit in the last place of a two-significant-figure number."""
    return 0.5 * 10.0 ** (np.floor(np.log10(abs(value))) - 1)


def _fan_quadrature(poly: ConvexPolygon, ref: Sequence[float]) -> float:
    """Polar second moment by adaptive quadrature over the triangle fan from ``ref``."""
    ref = np.asarray(ref, dtype=float)
    total = 0.0
    for p, q, _ in poly.edges():
        a, b = p - ref, q - ref
        jac = abs(a[0] * b[1] - a[1] * b[0])

        def integrand(w, u):
            x = u * a + w * b
            return float(x @ x) * jac

        total += integrate.dblquad(integrand, 0.0, 1.0, 0.0, lambda u: 1.0 - u,
                                   epsabs=1e-13, epsrel=1e-12)[0]
    return total


def verify_cn(n_max: int = 12) -> List[Check]:
    """c_n formula against quadrature over the unit-area regular n-gon."""
    if n_max > 64:
        raise InvalidParameter(f"n_max must be <= 64, got {n_max}")
    checks = []
    for n in range(3, n_max + 1):
        poly = geometry.regular_polygon(n)
        center, exact = geometry.min_second_moment(poly)
        quad = _fan_quadrature(poly, center)
        checks.append(_check(f'c_n[{n}] quadrature', quad, cn(n), 1e-8,
                             detail=f'closed-form triangle sum {exact:.15g}'))
    checks.append(_check('c_6 to six decimals', round(cn(6), 6), 0.160375, 5e-7))
    checks.append(_check('c_6 = 5 sqrt(3) / 54', cn(6), CONSTANTS.c6, 1e-15))
    checks.append(_check('c_64 near 1/(2 pi)', cn(64), 1.0 / (2.0 * np.pi), 1e-3))
    ns = np.arange(3, 10_001, dtype=float)
    values = cn(ns)
    checks.append(_check('c_n strictly decreasing, above 1/(2 pi)', float(values.min() - 1.0 / (2.0 * np.pi)),
                         passed=bool(np.all(np.diff(values) < 0) and np.all(values > 1.0 / (2.0 * np.pi)))))
    h = 1e-4
    slope = (cn(6.0 + h) - cn(6.0 - h)) / (2.0 * h)
    checks.append(_check('kappa = dc_n/dn at 6', slope, CONSTANTS.kappa, 1e-8))
    checks.append(_check('kappa negative', CONSTANTS.kappa, passed=CONSTANTS.kappa < 0))
    return checks


def verify_convexity_bound(n_v: int = 10_000, n_max: int = 1000, consts: Constants = CONSTANTS) -> List[Check]:
    """Scans f(v,n) - 3 c6 v + kappa (6-n) >= xi (v-1)^2 + zeta (1/n - 1/6)^2 for v >= m1."""
    v = np.logspace(np.log10(consts.m1), 2.0, n_v)
    worst, where = np.inf, None
    violations = 0
    for start in range(3, n_max + 1, 100):
        ns = np.arange(start, min(start + 100, n_max + 1), dtype=float)
        gap = convexity_gap(v[None, :], ns[:, None], consts)
        violations += int(np.count_nonzero(gap < -1e-12))
        k = np.unravel_index(np.argmin(gap), gap.shape)
        if gap[k] < worst:
            worst, where = float(gap[k]), (float(v[k[1]]), int(ns[k[0]]))
    checks = [_check('convexity bound grid', worst, passed=violations == 0,
                     detail=f'{violations} violations; minimum at (v, n) = {where}')]
    checks.append(_check('convexity bound equality at (1, 6)', convexity_gap(1.0, 6.0, consts), 0.0, 1e-15))
    checks.append(_check('convexity bound at (4, 6)', convexity_gap(4.0, 6.0, consts),
                         8.0 * consts.c6 - 9.0 * consts.xi, 1e-12))
    below = np.logspace(-10.0, np.log10(consts.m1), 2000, endpoint=False)
    negative = below[convexity_gap(below, 6.0, consts) < 0]
    checks.append(_check('convexity bound fails below m1', float(negative.max()) if len(negative) else None,
                         passed=len(negative) > 0,
                         detail='the bound needs v >= m1; it is negative for small masses'))
    return checks


def _exact_constants():
    c6 = 5 * sp.sqrt(3) / 54
    kappa = 2 * sp.pi / 243 - 5 * sp.sqrt(3) / 324
    xi = sp.Rational(1, 1000)
    zeta = sp.Rational(1, 1000)
    return c6, kappa, xi, zeta


def _cn_exact(n: int):
    return (sp.tan(sp.pi / n) / 3 + sp.cot(sp.pi / n)) / (2 * n)


def quartic(lead, n_term, s):
    """a s^4 + (2 xi - 3 c6) s^2 + 2 c6 s + e: the convexity gap at v = s^2 after bounding c_n and n."""
    c6, _, xi, _ = _exact_constants()
    return sp.Poly((lead - xi) * s ** 4 + (2 * xi - 3 * c6) * s ** 2 + 2 * c6 * s + n_term, s)


def _real_roots(poly: sp.Poly) -> np.ndarray:
    roots = np.roots([float(c) for c in poly.all_coeffs()])
    return np.sort(roots[np.abs(roots.imag) < 1e-10].real)


def verify_polynomial_certificates() -> List[Check]:
    """Roots and discriminants of the polynomials p_6, p_8 and q_n."""
    c6, kappa, xi, zeta = _exact_constants()
    s = sp.Symbol('s')
    checks = []

    p6 = sp.Poly((c6 - xi) * s ** 2 + 2 * (c6 - xi) * s - xi, s)
    gap6 = 2 * c6 * s + c6 * s ** 4 - 3 * c6 * s ** 2 - xi * (s ** 2 - 1) ** 2
    identity = sp.simplify(sp.expand(gap6 - (s - 1) ** 2 * p6.as_expr())) == 0
    checks.append(_check('p_6 factorization of the n = 6 gap', identity, passed=identity))
    u6 = float(max(_real_roots(p6)))
    checks.append(_check('u_6 positive root of p_6', u6, REFERENCE_U6, 5e-5))
    checks.append(_check('u_6^2 < m1', u6 ** 2, passed=u6 ** 2 < CONSTANTS.m1))

    p8 = quartic(1 / (2 * sp.pi), -2 * kappa - xi - zeta / 36, s)
    disc8 = float(sp.discriminant(p8.as_expr(), s).evalf(30))
    checks.append(_check('discriminant of p_8', disc8, REFERENCE_P8_DISCRIMINANT, _half_unit(REFERENCE_P8_DISCRIMINANT)))
    roots8 = _real_roots(p8)
    checks.append(_check('real roots of p_8 negative', roots8.tolist(),
                         passed=len(roots8) == 2 and bool(np.all(roots8 < 0))))

    positive = {}
    for n, reference in REFERENCE_DISCRIMINANTS.items():
        e_n = (6 - n) * kappa - xi - zeta * (sp.Rational(1, n) - sp.Rational(1, 6)) ** 2
        qn = quartic(_cn_exact(n), e_n, s)
        disc = float(sp.discriminant(qn.as_expr(), s).evalf(30))
        checks.append(_check(f'discriminant of q_{n}', disc, reference, _half_unit(reference)))
        roots = _real_roots(qn)
        pos = roots[roots > 0]
        positive[n] = float(pos.max()) if len(pos) else 0.0
        checks.append(_check(f'q_{n} has one positive root', positive[n], passed=len(pos) == 1))
    order = [positive[7], positive[5], positive[4], positive[3], ROOT_CEILING]
    checks.append(_check('u_7 < u_5 < u_4 < u_3 < 0.012', order, passed=bool(np.all(np.diff(order) > 0))))
    checks.append(_check('u_3^2 < m1', positive[3] ** 2, passed=positive[3] ** 2 < CONSTANTS.m1))
    return checks


def r_hat(A: float, c6: float = CONSTANTS.c6) -> float:
    """Positive root of R^2 = (R + d_A) [12 c6 (2 A^{-1/2} + A)]^{1/2}."""
    d_a = 2.0 ** 1.5 * 3.0 ** -0.75 * np.sqrt(A)
    k = np.sqrt(12.0 * c6 * (2.0 / np.sqrt(A) + A))
    return 0.5 * (k + np.sqrt(k * k + 4.0 * k * d_a))


def verify_minv_constants(consts: Constants = CONSTANTS) -> List[Check]:
    """Constants of the minimal-mass argument: A, R_0, m_0, D_0 and the ball integral."""
    res = optimize.minimize_scalar(r_hat, bracket=(0.3, 0.6, 1.0), method='golden', tol=1e-10)
    checks = [
        _check('argmin A of R_0(A)', float(res.x), 0.5820, 1e-3),
        _check('min R_0(A) < 3.2143', float(res.fun), passed=float(res.fun) < consts.R0),
    ]
    m0 = consts.c6 ** 2 / consts.R0 ** 4
    checks.append(_check('m_0 = c6^2 / R_0^4 >= 2.4095e-4', m0, passed=m0 >= consts.m0))
    checks.append(_check('m_0 > m_1', consts.m0, passed=consts.m0 > consts.m1))
    d0_sq = 4.0 * (consts.c6 / np.sqrt(consts.m0) + consts.R0 ** 2)
    checks.append(_check('D_0^2 = 4 [c6 m_0^{-1/2} + R_0^2]', consts.D0 ** 2, d0_sq, 1e-12 * d0_sq))
    for radius in (1.0, consts.R0):
        value = integrate.quad(lambda r: 2.0 * np.pi * r * min(r, radius - r) ** 2, 0.0, radius,
                               points=[radius / 2.0], epsabs=1e-14, epsrel=1e-13)[0]
        expected = np.pi * radius ** 4 / 12.0
        checks.append(_check(f'ball distance integral, R = {radius:g}', value, expected, 1e-10 * expected))
    return checks


def verify_hessian_g(ns: Optional[Sequence[float]] = None, vs: Sequence[float] = (0.25, 1.0, 4.0)) -> List[Check]:
    """Finite-difference Hessian of g(v, n) = v^2 c_n against its closed-form determinant."""
    # the difference stencil needs n - h >= 3
    ns = np.r_[3.001, np.arange(3.5, 12.5, 0.5)] if ns is None else np.asarray(ns, dtype=float)

    def g(v, n):
        return v * v * cn(n)

    worst = 0.0
    for v in vs:
        for n in ns:
            hv, hn = 1e-4 * v, 1e-3
            gvv = (g(v + hv, n) - 2.0 * g(v, n) + g(v - hv, n)) / hv ** 2
            gnn = (g(v, n + hn) - 2.0 * g(v, n) + g(v, n - hn)) / hn ** 2
            gvn = (g(v + hv, n + hn) - g(v + hv, n - hn) - g(v - hv, n + hn) + g(v - hv, n - hn)) / (4.0 * hv * hn)
            det = gvv * gnn - gvn ** 2
            closed = hessian_det_g(v, n)
            worst = max(worst, abs(det - closed) / closed)
    checks = [_check('det D^2 g matches 8 pi^2 v^2 sec^2(pi/n) / (9 n^6)', worst, passed=worst <= 1e-4,
                     detail='max relative deviation')]
    h = 1e-4
    gvv6 = (g(1.0 + h, 6.0) - 2.0 * g(1.0, 6.0) + g(1.0 - h, 6.0)) / h ** 2
    checks.append(_check('d^2 g / dv^2 at n = 6 equals 2 c6', gvv6, 2.0 * CONSTANTS.c6, 1e-6))
    ratio = hessian_det_g(2.0, 6.0) / hessian_det_g(1.0, 6.0)
    checks.append(_check('det D^2 g scales as v^2', ratio, 4.0, 1e-12))
    return checks


def verify_hextrial_constant(eta: float = 0.1) -> List[Check]:
    """Boundary constant of the cropped tiling against 2 d (1 + eta) 3 c6, d the hexagon diameter."""
    expected = 2.0 * CONSTANTS.hexagon_diameter * (1.0 + eta) * 3.0 * CONSTANTS.c6
    return [_check(f'hexagonal trial constant, eta = {eta:g}', hextrial_constant(eta), expected, 1e-12)]


def lattice_cells(base: ConvexPolygon, m: float, offset: Sequence[float] = (0.0, 0.0)) -> List[ConvexPolygon]:
    """Hexagonal cells of the lattice m^{-1/2} T cropped to ``base``; empty crops dropped."""
    lattice = TriangularLattice(translation=tuple(offset), scale=m ** -0.5)
    v = base.vertices
    margin = 2.0 * lattice.spacing
    sites = lattice.points_in_box(v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max(), margin)
    planes = geometry.domain_halfplanes(base)
    cells = []
    for z in sites:
        cell = geometry.regular_polygon(6, 1.0 / m, center=z, rotation=np.pi / 6.0)
        for h in planes:
            cell = geometry.clip(cell, h)
            if cell is None:
                break
        if cell is not None:
            cells.append(cell)
    return cells


def excess_decay(ms: Sequence[float], excess: Sequence[float], min_r2: float = 0.95) -> Check:
    """Excess positive, C_hat finite and log(excess) linear in log(m) with R^2 >= ``min_r2``."""
    ms, ex = np.asarray(ms, dtype=float), np.asarray(excess, dtype=float)
    c_hat = float(np.max(ex * np.sqrt(ms)))
    fit = stats.linregress(np.log(ms), np.log(np.maximum(ex, 1e-300)))
    r2 = float(fit.rvalue ** 2)
    passed = bool(np.all(ex >= -1e-12)) and np.isfinite(c_hat) and fit.slope < 0 and r2 >= min_r2
    return _check('excess <= C_hat m^{-1/2}, log-log fit', c_hat, passed=passed,
                  detail=f'log-log slope {fit.slope:.3f}, r^2 {r2:.3f} (need >= {min_r2})')


def fejes_toth_scaling(domain: DomainSpec, m_list: Sequence[int] = (100, 178, 316, 562, 1000, 1778),
                       offsets: Sequence[Sequence[float]] = ((0.0, 0.0), (0.31, 0.17), (0.13, 0.41), (0.47, 0.29)),
                       min_r2: float = 0.95) -> List[Check]:
    """#supp(mu_m) W(mu_m) >= c6 for the cropped scaled lattice, its m^{-1/2} excess and the boundary count."""
    if domain.is_torus or domain.sides > 6:
        raise InvalidParameter("the lattice scaling check needs a polygon with at most six sides")
    if max(m_list) > 2000:
        raise InvalidParameter("m values are limited to 2000")
    base = domain.base
    c6 = CONSTANTS.c6
    lowest = np.inf
    excess, boundary = [], []
    for m in m_list:
        ex, bd = [], []
        for off in offsets:
            shift = np.asarray(off) * m ** -0.5
            cells = lattice_cells(base, m, shift)
            cost = sum(geometry.min_second_moment(c)[1] for c in cells)
            value = len(cells) * cost
            lowest = min(lowest, value)
            ex.append(value - c6)
            bd.append(sum(abs(geometry.area(c) - 1.0 / m) > 1e-9 / m for c in cells))
        excess.append(float(np.mean(ex)))
        boundary.append(float(np.mean(bd)))
    ms = np.asarray(m_list, dtype=float)
    ex_arr, bd_arr = np.asarray(excess), np.asarray(boundary)
    decay = excess_decay(ms, ex_arr, min_r2)
    b_fit = stats.linregress(np.log(ms), np.log(np.maximum(bd_arr, 1.0)))
    logger.info("lattice scaling: C_hat=%.4g, %s", decay.computed, decay.detail)
    return [
        _check('#supp W >= c6 for every m', lowest, passed=lowest >= c6 - 1e-12,
               detail=f'min over {len(m_list)} m values'),
        decay,
        _check('boundary cells b(m) ~ m^{1/2}', float(np.max(bd_arr / np.sqrt(ms))),
               passed=bool(np.all(bd_arr / np.sqrt(ms) < 50.0)),
               detail=f'log-log slope {b_fit.slope:.3f}'),
    ]


def scaling_table(domain: DomainSpec, m_list: Sequence[int]) -> Dict[int, float]:
    """#supp W for one lattice offset per m, for plotting."""
    out = {}
    for m in m_list:
        cells = lattice_cells(domain.base, m)
        out[m] = len(cells) * sum(geometry.min_second_moment(c)[1] for c in cells)
    return out


def certify(domain: Optional[DomainSpec] = None, threads: int = 1, quick: bool = False) -> CertificateReport:
    """Runs every check and collects them in one report."""
    domain = domain or DomainSpec.polygon(named_shape('regular-hexagon'), 2.0 * CONSTANTS.c6)
    m_list = (100, 316, 1000) if quick else (100, 178, 316, 562, 1000, 1778)
    jobs = [
        lambda: verify_cn(12),
        lambda: verify_convexity_bound(2000 if quick else 10_000, 200 if quick else 1000),
        verify_polynomial_certificates,
        verify_minv_constants,
        verify_hessian_g,
        verify_hextrial_constant,
        lambda: fejes_toth_scaling(domain, m_list),
    ]
    report = CertificateReport()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: job(), jobs))
    else:
        results = [job() for job in jobs]
    for checks in results:
        report.extend(checks)
    logger.info("certificate: %d checks, %d failed", len(report.checks), len(report.failures))
    return report
