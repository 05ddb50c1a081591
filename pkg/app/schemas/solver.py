# app/schemas/solver.py
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import (
    DEFAULT_CG_MAX_ITERATIONS,
    DEFAULT_CG_TOLERANCE,
    DEFAULT_OUTER_MAX_ITERATIONS,
    DEFAULT_OUTER_TOLERANCE,
)


class InitialGuess(BaseModel):
    """Positive bump: product of boundary sines times a Gaussian around `center`."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    width: float = Field(default=0.5, gt=0)  # relative to the box half-widths
    amplitude: float = Field(default=1.0, gt=0)


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    cg_tolerance: float = Field(default=DEFAULT_CG_TOLERANCE, gt=0)
    cg_max_iterations: int = Field(default=DEFAULT_CG_MAX_ITERATIONS, gt=0)
    outer_tolerance: float = Field(default=DEFAULT_OUTER_TOLERANCE, gt=0)
    outer_max_iterations: int = Field(default=DEFAULT_OUTER_MAX_ITERATIONS, gt=0)
    step: float = Field(default=1.0, gt=0)
    backtrack_factor: float = Field(default=0.5, gt=0, lt=1)
    max_backtracks: int = Field(default=30, ge=0)
    initial_guess: InitialGuess = InitialGuess()
    mountain_pass_t_max: float = Field(default=3.0, gt=1)
    eigen_tolerance: float = Field(default=1e-10, gt=0)
    eigen_max_iterations: int = Field(default=500, gt=0)
    threads: int = Field(default=1, gt=0)


class SampleConfig(BaseModel):
    """Sampling plan for the growth-condition checks."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    lo: Tuple[float, float, float] = (-1.0, -1.0, -1.0)
    hi: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    points: int = Field(default=200, gt=0)
    xi_max: float = Field(default=10.0, gt=0)
    xi_count: int = Field(default=41, ge=3)
    small_probe: float = Field(default=1e-6, gt=0)
    large_probe: float = Field(default=1e6, gt=0)
    small_threshold: float = Field(default=1e-2, gt=0)
    large_threshold: float = Field(default=1e2, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _ordered(self):
        if any(b <= a for a, b in zip(self.lo, self.hi)):
            raise ValueError("sample box must have lo < hi on every axis")
        if self.small_probe >= self.large_probe:
            raise ValueError("small_probe must be below large_probe")
        return self


class Verdict(str, Enum):
    passed = "pass"
    failed = "fail"
    not_applicable = "not_applicable"


class ConditionVerdict(BaseModel):
    status: Verdict
    heuristic: bool = True  # finite sampling cannot certify a limit or an a.e. bound
    detail: str = ""


class GrowthReport(BaseModel):
    verdicts: Dict[str, ConditionVerdict]

    @property
    def all_passed(self) -> bool:
        return all(v.status == Verdict.passed for v in self.verdicts.values())


class SolutionReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    u: object = Field(exclude=True)  # GridFunction3D
    energy: float
    gradient_norm: float
    nehari_residual: float
    l2_norm: float
    iterations: int
    mountain_pass_level: Optional[float] = None
    alpha: float
    q: float
    dims: Tuple[int, int, int]


class EmbeddingEntry(BaseModel):
    lq_norm: float
    gradient_norm: float
    ratio: float  # ||u||_q / (C_q ||grad_G u||)
    margin: float  # (1 + slack) C_q ||grad_G u|| - ||u||_q


class EmbeddingReport(BaseModel):
    q: float
    constant: float
    weighted_volume: float
    slack: float
    entries: List[EmbeddingEntry]
    max_ratio: float
    violations: int


class ManufacturedReport(BaseModel):
    resolutions: List[int]
    spacings: List[float]
    errors: List[float]
    orders: List[float]
