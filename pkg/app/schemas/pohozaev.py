# app/schemas/pohozaev.py
from enum import Enum
from typing import List

from pydantic import BaseModel


class ExponentRegime(str, Enum):
    subcritical = "subcritical"
    critical = "critical"
    supercritical = "supercritical"


class StarShapedVerdict(BaseModel):
    verdict: bool
    min_value: float  # smallest x1 n1 + x2 n2 + (1 + a) y n3 over the boundary samples


class PohozaevReport(BaseModel):
    p: float
    alpha: float
    coefficient: float
    lhs: float
    rhs: float
    rhs_printed: float  # boundary integral without the factor 1/2
    residual: float
    trivial: bool
    regime: ExponentRegime
    star_shaped: StarShapedVerdict


class PohozaevTrend(BaseModel):
    resolutions: List[int]
    residuals: List[float]
    decreasing: bool
