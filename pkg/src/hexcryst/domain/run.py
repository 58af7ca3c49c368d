from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from hexcryst.domain.constants import C6, lambda_for_volume
from hexcryst.domain.domain import DomainSpec, domain_from_shape
from hexcryst.domain.errors import ConfigError
from hexcryst.domain.reports import CertificateReport, EnergyReport, StabilityReport

SHAPES = ('square', 'regular-hexagon', 'regular-k-gon', 'disk-approx', 'polygon', 'torus', 'commensurate-torus')


@dataclass
class DomainConfig:
    shape: str = 'square'
    sides: Optional[int] = None
    vertices: Optional[List[List[float]]] = None
    gamma: Optional[float] = None
    k: Optional[int] = None
    m: Optional[int] = None


@dataclass
class RunConfig:
    domain: DomainConfig = field(default_factory=DomainConfig)
    lam: Optional[float] = None
    v_lambda: Optional[float] = None
    n: Optional[int] = None
    scan: Optional[List[int]] = None
    minimizer: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    tol_mass: float = 1e-8
    tau: float = 0.05

    @property
    def resolved_lambda(self) -> float:
        if self.lam is not None:
            return self.lam
        if self.v_lambda is not None:
            return lambda_for_volume(self.v_lambda)
        return 2.0 * C6

    def build_domain(self) -> DomainSpec:
        d = self.domain
        return domain_from_shape(d.shape, self.resolved_lambda, sides=d.sides, vertices=d.vertices,
                                 gamma=d.gamma, k=d.k, m=d.m)

    def n_values(self) -> Sequence[int]:
        if self.scan:
            lo, hi = self.scan
            if lo < 1 or hi < lo:
                raise ConfigError(f"scan range must satisfy 1 <= A <= B, got {lo}..{hi}")
            return list(range(lo, hi + 1))
        if self.n is None:
            raise ConfigError("either 'n' or 'scan' is required")
        return [self.n]


@dataclass
class RunRecord:
    command: str
    config_hash: str
    version: str
    run_id: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)
    energy: Optional[EnergyReport] = None
    stability: Optional[StabilityReport] = None
    certificate: Optional[CertificateReport] = None
    converged: Optional[bool] = None
    iterations: Optional[int] = None
    n: Optional[int] = None
    files: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)
