"""Pipeline configuration: one JSON file, every constant flag-overridable."""
from __future__ import annotations

import json

from pydantic import BaseModel, Field, field_validator


class PipelineConfig(BaseModel):
    imagery: str | None = None
    labels: str | None = None
    dem: str | None = None
    out_dir: str = "out"

    buffer_radius_m: float = Field(default=2.0, gt=0)
    apply_buffer: bool = True
    merge_roads: bool = True
    median_kernel: int = Field(default=7, gt=0)
    dp_tolerance_m: float = Field(default=0.5, gt=0)
    min_area_m2: float = Field(default=30.0, gt=0)
    threshold: float = Field(default=0.5, gt=0, le=1)
    tile_size: int = Field(default=1024, gt=0)
    seed: int = 0

    rf_trees: int = Field(default=50, gt=0)
    rf_max_depth: int = Field(default=12, gt=0)
    rf_min_leaf: int = Field(default=4, gt=0)

    gbdt_trees: int = Field(default=200, gt=0)
    gbdt_learning_rate: float = Field(default=0.1, gt=0)
    gbdt_max_depth: int = Field(default=3, gt=0)

    workers: int = Field(default=1, gt=0)

    @field_validator("median_kernel")
    @classmethod
    def _odd_kernel(cls, v: int) -> int:
        if v % 2 != 1:
            raise ValueError("median_kernel must be odd")
        return v

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls.model_validate(json.loads(text))

    @classmethod
    def load(cls, path: str) -> "PipelineConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())
