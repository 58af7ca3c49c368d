from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class CellRecord:
    index: int
    x: float
    y: float
    mass: float
    weight: float
    edges: int
    # transport cost of the cell about its own site
    cost: float
    # polar moment about the centroid, the cell's share of F
    second_moment: float
    lower_bound: float
    boundary: bool = False


@dataclass
class EnergyReport:
    surface: float
    transport: float
    total: float
    V_lambda: float
    defect: float
    cells: List[CellRecord] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.cells)

    def __repr__(self):
        return f'<EnergyReport E={self.total:.10g} d={self.defect:.3e} n={self.n}>'


@dataclass
class StabilityReport:
    defect: float
    tau: float
    closeness: List[float]
    good: List[bool]
    fraction_defective: float
    interior_fraction_defective: float
    boundary_fraction_defective: float
    neighbor_min: float
    neighbor_max: float
    neighbor_mean: float
    avg_edges: float
    euler_bound: float
    euler_pass: bool

    @property
    def max_neighbor_deviation(self) -> float:
        return max(abs(self.neighbor_min - 1.0), abs(self.neighbor_max - 1.0))


@dataclass
class Check:
    name: str
    passed: bool
    computed: Any = None
    expected: Any = None
    deviation: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ''


@dataclass
class CertificateReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def extend(self, checks: List[Check]):
        self.checks.extend(checks)

    def by_name(self) -> Dict[str, Check]:
        return {c.name: c for c in self.checks}
