# app/schemas/geometry.py
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

ShapeName = Literal["ball-sector", "anisotropic-ball", "cylinder", "box", "ellipsoid", "ball"]


class ShapeSpec(BaseModel):
    """
    A member of the built-in shape corpus, addressed by name plus parameters.
    Parameters that a shape does not use are ignored.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: ShapeName
    radius: float = Field(default=1.0, gt=0)
    halfheight: float = Field(default=1.0, gt=0)
    semi_axes: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    half_widths: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    sector: int = Field(default=1, ge=1)  # ball-sector only
    scale: float = Field(default=1.0, gt=0)  # anisotropic dilation applied last


class ReferenceValues(BaseModel):
    volume: float
    sector_perimeter: float


class IsoperimetricCheck(BaseModel):
    quotient: float
    reference: float
    deficit: float
    tolerance: float
    error_estimate: float
    passed: bool


class PowerSumCheck(BaseModel):
    total: float  # P^{3/2}
    sector_sum: float  # sum_j P_j^{3/2}
    margin: float
    passed: bool


class ConvergenceStudy(BaseModel):
    resolutions: List[int]
    values: List[float]
    order: Optional[float] = None


class PushforwardCheck(BaseModel):
    weighted: float
    euclidean: float
    rel_gap: float
