# app/schemas/requests.py
from typing import List, Optional

from pydantic import BaseModel, Field

from app.schemas.common import QuadratureConfig
from app.schemas.geometry import ShapeSpec
from app.schemas.sobolev import FamilyConfig
from app.schemas.solver import SolverConfig


class GeometryRequest(BaseModel):
    alpha: float = Field(gt=0)
    shape: Optional[ShapeSpec] = None
    sweep: bool = False
    quadrature: QuadratureConfig = QuadratureConfig()


class SobolevRequest(BaseModel):
    alphas: List[float] = Field(min_length=1)
    family: Optional[FamilyConfig] = None


class SolveRequest(BaseModel):
    alpha: float = Field(gt=0)
    q: float
    grid: int = Field(gt=0)
    half_width: float = Field(default=1.0, gt=0)
    solver: SolverConfig = SolverConfig()


class PohozaevRequest(BaseModel):
    p: float
    alpha: float = Field(gt=0)
    grid: Optional[int] = Field(default=None, gt=0)
    half_width: float = Field(default=1.0, gt=0)
    solver: SolverConfig = SolverConfig()


class TransformRequest(BaseModel):
    alpha: float = Field(gt=0)
    shape: ShapeSpec
    quadrature: QuadratureConfig = QuadratureConfig()
