# app/schemas/sobolev.py
from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RayleighReport(BaseModel):
    numerator: float  # Grushin Dirichlet energy, i.e. the squared gradient norm
    denominator: float  # weighted L^q norm
    quotient: float
    alpha: float
    q: float


class FamilyConfig(BaseModel):
    """
    Search space for the Rayleigh minimization: truncated extremal profiles
    on a full-space grid with 2n-fold symmetric perturbations.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    q: float = 6.0
    resolution: int = Field(default=64, ge=8)
    truncation: float = Field(default=20.0, gt=0)
    perturbations: int = Field(default=3, ge=0, le=3)
    max_iterations: int = Field(default=60, gt=0)
    core_cells: float = Field(default=4.0, gt=0)  # cells across the narrowest admissible core
    threads: int = Field(default=1, gt=0)  # workers for the slab reductions of each member
    extrapolate: bool = True  # combine N and N/2 to cancel the linear truncation error

    @model_validator(mode="after")
    def _even_resolution(self):
        if self.resolution % 2:
            raise ValueError("resolution must be even so no cell center sits on the y-axis")
        if self.extrapolate and self.resolution % 4:
            raise ValueError("resolution must be a multiple of 4 so the half-resolution grid is even too")
        return self


class RayleighMinimum(BaseModel):
    estimate: float
    grid_estimate: float  # best raw quotient at the configured resolution
    coarse_estimate: Optional[float] = None  # the same member at half resolution
    full_space_quotient: float
    initial_estimate: float
    parameters: Dict[str, float]
    evaluations: int


class SobolevRow(BaseModel):
    alpha: float
    n_alpha: int
    D: float
    L_derived: float
    L_paper_printed: float
    D_printed: float
    rayleigh_min: Optional[float] = None
