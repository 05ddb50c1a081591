# app/schemas/report.py
import json
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class Check(BaseModel):
    """One inequality lhs >= rhs - tolerance, with everything needed to recompute it."""
    name: str
    lhs: float
    rhs: float
    margin: float  # lhs - rhs
    tolerance: float
    passed: bool


class RunReport(BaseModel):
    command: str
    parameters: Dict[str, Any]
    version: str
    resolutions: Dict[str, int] = Field(default_factory=dict)
    quantities: Dict[str, Optional[float]] = Field(default_factory=dict)
    labels: Dict[str, str] = Field(default_factory=dict)
    checks: List[Check] = Field(default_factory=list)
    wall_time: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        """Deterministic JSON: sorted keys, wall_time dropped when unset."""
        data = self.model_dump(mode="json", exclude_none=False)
        if data.get("wall_time") is None:
            data.pop("wall_time", None)
        return json.dumps(data, sort_keys=True, indent=2)
