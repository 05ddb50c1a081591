# app/schemas/common.py
import math

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator

from app.core.config import (
    DEFAULT_REFINE_DEPTH,
    DEFAULT_SURFACE_RESOLUTION,
    DEFAULT_VOLUME_RESOLUTION,
    MAX_REFINE_DEPTH,
)


class AlphaParam(BaseModel):
    """
    The degeneracy exponent alpha together with its sector count n(alpha),
    the smallest positive integer with n >= alpha + 1.
    """
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0)

    @field_validator("alpha")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("alpha must be finite")
        return value

    @computed_field
    @property
    def sector_count(self) -> int:
        return math.ceil(self.alpha) + 1

    @property
    def sector_width(self) -> float:
        return math.pi / self.sector_count

    @property
    def sector_total(self) -> int:
        # sectors j = 1..2n(alpha) tile the plane
        return 2 * self.sector_count


class QuadratureConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    volume_resolution: int = Field(default=DEFAULT_VOLUME_RESOLUTION, gt=0)
    surface_resolution: int = Field(default=DEFAULT_SURFACE_RESOLUTION, gt=0)
    refine_depth: int = Field(default=DEFAULT_REFINE_DEPTH, ge=0, le=MAX_REFINE_DEPTH)
    threads: int = Field(default=1, gt=0)

    def halved(self) -> "QuadratureConfig":
        """Same settings at half resolution, used for error estimates."""
        return self.model_copy(update={
            "volume_resolution": max(2, self.volume_resolution // 2),
            "surface_resolution": max(2, self.surface_resolution // 2),
        })
