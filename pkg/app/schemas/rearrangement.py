# app/schemas/rearrangement.py
from typing import List

from pydantic import BaseModel


class CoareaComparison(BaseModel):
    t: float
    delta: float
    lhs: float  # -d/dt |{u > t}| from the grid
    rhs: float  # the same derivative for the rearranged profile
    relative_gap: float
    plateau: bool  # flat cells near t make both estimates unreliable


class EquimeasurabilityReport(BaseModel):
    levels: List[float]
    source_measures: List[float]
    rearranged_measures: List[float]
    sup_gap: float
    support_measure: float
    relative_gap: float


class PolyaSzegoReport(BaseModel):
    energy: float
    rearranged_energy: float
    gap: float
    ratio: float
    jumps: int
