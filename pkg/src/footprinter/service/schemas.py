"""Request/response models for the processing service.

Requests reference files on storage shared with the service; responses return
the artifact paths they wrote plus per-stage wall time and peak memory.
"""
from __future__ import annotations

from pydantic import BaseModel, Field


class StageStats(BaseModel):
    stage: str
    wall_s: float
    peak_mb: float


class SynthRequest(BaseModel):
    out_dir: str
    width_px: int = Field(default=2048, gt=0)
    height_px: int = Field(default=2048, gt=0)
    pixel_size: float = Field(default=0.5, gt=0)
    building_count: int = Field(default=300, ge=0)
    train_count: int = Field(default=150, ge=0)
    color_mode: str = "easy"
    noise_sigma: float = Field(default=8.0, ge=0)
    seed: int = 0


class SynthResponse(BaseModel):
    imagery: str
    dem: str
    truth: str
    annotations: str
    test_buildings: str
    val_buildings: str
    val_region: str
    windows: str
    building_count: int
    train_count: int
    test_count: int
    stats: StageStats


class RasterizeLabelsRequest(BaseModel):
    annotations: str
    reference: str  # raster whose grid the mask adopts
    out_mask: str
    buffer_radius_m: float = Field(default=2.0, gt=0)
    apply_buffer: bool = True
    merge_roads: bool = True
    labels_crs: str = "scene"  # "scene" | "wgs84"
    central_meridian: float | None = None


class RasterizeLabelsResponse(BaseModel):
    mask: str
    labeled_pixels: int
    building_pixels: int
    background_pixels: int
    road_pixels: int
    warnings: list[str]
    stats: StageStats


class TrainForestRequest(BaseModel):
    imagery: str
    mask: str
    out_model: str
    trees: int = Field(default=50, gt=0)
    max_depth: int = Field(default=12, gt=0)
    min_leaf_size: int = Field(default=4, gt=0)
    seed: int = 0


class TrainForestResponse(BaseModel):
    model: str
    training_pixels: int
    stats: StageStats


class PredictRequest(BaseModel):
    imagery: str
    model: str
    out_prediction: str
    tile_size: int = Field(default=1024, gt=0)


class PredictResponse(BaseModel):
    prediction: str
    stats: StageStats


class PolygonizeRequest(BaseModel):
    prediction: str
    out_footprints: str
    threshold: float = Field(default=0.5, gt=0, le=1)
    tile_size: int = Field(default=1024, gt=0)
    dp_tolerance_m: float = Field(default=0.5, gt=0)
    min_area_m2: float = Field(default=30.0, gt=0)
    median_kernel: int = Field(default=7, gt=0)


class PolygonizeResponse(BaseModel):
    footprints: str
    footprint_count: int
    stats: StageStats


class EvalRequest(BaseModel):
    footprints: str
    out_report: str
    test_buildings: str | None = None
    windows: str | None = None
    prediction: str | None = None  # enables pixel P/R/F1
    val_buildings: str | None = None
    val_region: str | None = None
    threshold: float = Field(default=0.5, gt=0, le=1)
    k_values: list[float] = [0.7]


class EvalResponse(BaseModel):
    report: str
    precision: float | None
    recall: float | None
    f1: float | None
    recall_at_k: dict[str, float]
    r2: float | None
    adjustment_slope: float | None
    adjustment_intercept: float | None
    adjustment_rmse: float | None
    warnings: list[str]
    stats: StageStats


class SweepRequest(BaseModel):
    imagery: str
    annotations: str
    val_buildings: str
    val_region: str
    windows: str
    out_csv: str
    n_labels: list[int]
    repeats: int = Field(default=5, gt=0)
    seed: int = 0
    apply_buffer: bool = True
    merge_roads: bool = True
    buffer_radius_m: float = Field(default=2.0, gt=0)
    trees: int = Field(default=50, gt=0)
    max_depth: int = Field(default=12, gt=0)
    min_leaf_size: int = Field(default=4, gt=0)
    tile_size: int = Field(default=1024, gt=0)
    threshold: float = Field(default=0.5, gt=0, le=1)
    dp_tolerance_m: float = Field(default=0.5, gt=0)
    min_area_m2: float = Field(default=30.0, gt=0)


class SweepResponse(BaseModel):
    csv: str
    rows: int
    stats: StageStats


class ChangeRequest(BaseModel):
    footprints_t0: str
    footprints_t1: str
    out_grid: str
    cell_size: float = Field(default=500.0, gt=0)
    adjustment_t0: list[float] | None = None  # [slope, intercept]
    adjustment_t1: list[float] | None = None
    window_size: float = Field(default=200.0, gt=0)


class ChangeResponse(BaseModel):
    grid: str
    cells: int
    delta_sum: int
    audit: dict
    total_t0: float | None
    total_t1: float | None
    stats: StageStats


class QualityExtractRequest(BaseModel):
    footprints: str
    out_csv: str
    dem: str | None = None
    labels_from: str | None = None  # footprint GeoJSON with quality properties


class QualityExtractResponse(BaseModel):
    csv: str
    rows: int
    labeled_rows: int
    stats: StageStats


class QualityTrainRequest(BaseModel):
    dataset: str
    out_model: str
    tree_count: int = Field(default=200, gt=0)
    learning_rate: float = Field(default=0.1, gt=0)
    max_depth: int = Field(default=3, gt=0)
    seed: int = 0
    repeats: int = Field(default=50, gt=0)
    test_fraction: float = Field(default=0.25, gt=0, lt=1)


class QualityTrainResponse(BaseModel):
    model: str
    f1_regular_mean: float
    f1_regular_std: float
    f1_low_quality_mean: float
    f1_low_quality_std: float
    importances: dict[str, float]
    stats: StageStats


class QualityClassifyRequest(BaseModel):
    model: str
    footprints: str
    out_footprints: str
    dem: str | None = None


class QualityClassifyResponse(BaseModel):
    footprints: str
    regular: int
    low_quality: int
    stats: StageStats
