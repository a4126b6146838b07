"""Evaluation surfaces: dense-region pixel P/R/F1, building Recall@k, and
window-count R^2 with the linear count adjustment.

Precision is only computable where labels are dense, so pixel metrics take an
explicit evaluation region and treat every unlabeled pixel inside it as
non-building. Recall@k rasterizes each held-out building onto the prediction
grid and requires at least a fraction k of its pixels to be predicted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import bounding_box, polygons_intersect
from .geojson_io import FootprintSet
from .labels import rasterize_polygons


@dataclass
class CountWindow:
    """Axis-aligned square window with a ground-truth building count."""
    x_min: float
    y_min: float
    size: float = 200.0
    actual_count: int = 0

    def ring(self):
        x0, y0, s = self.x_min, self.y_min, self.size
        return [(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s), (x0, y0)]


@dataclass
class CountAdjustment:
    slope: float
    intercept: float
    rmse: float

    def apply(self, raw: float) -> float:
        return self.slope * raw + self.intercept


@dataclass
class PixelScores:
    precision: float
    recall: float
    f1: float
    true_positives: int
    false_positives: int
    false_negatives: int
    precision_degenerate: bool = False


@dataclass
class EvalReport:
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    precision_degenerate: bool = False
    recall_at_k: dict = field(default_factory=dict)
    r2: float | None = None
    adjustment: CountAdjustment | None = None
    window_actual: list = field(default_factory=list)
    window_predicted: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "precision_degenerate": self.precision_degenerate,
            "recall_at_k": {f"{k:g}": v for k, v in self.recall_at_k.items()},
            "r2": self.r2,
            "adjustment": None if self.adjustment is None else {
                "slope": self.adjustment.slope,
                "intercept": self.adjustment.intercept,
                "rmse": self.adjustment.rmse,
            },
            "window_actual": self.window_actual,
            "window_predicted": self.window_predicted,
        }


def pixel_prf(prediction, val_buildings, val_region) -> PixelScores:
    """P/R/F1 of the building class inside a densely labeled region.

    `prediction` is a binary mask raster; truth positives are the rasterized
    val buildings, and every other pixel in the region counts as negative.
    Pixels outside the region are never read.
    """
    transform = prediction.transform
    region = rasterize_polygons([(val_region, [])], transform,
                                prediction.width, prediction.height).astype(bool)
    if not region.any():
        raise ValueError("evaluation region covers no pixel centers")
    truth = rasterize_polygons([(b, []) for b in val_buildings], transform,
                               prediction.width, prediction.height).astype(bool)
    pred = prediction.band(0) != 0
    tp = int((pred & truth & region).sum())
    fp = int((pred & ~truth & region).sum())
    fn = int((~pred & truth & region).sum())
    degenerate = (tp + fp) == 0
    precision = 0.0 if degenerate else tp / (tp + fp)
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return PixelScores(precision, recall, f1, tp, fp, fn, degenerate)


def recall_at_k(prediction, test_buildings, k: float):
    """Fraction of buildings with >= k of their pixels predicted as building.

    Buildings that rasterize to zero pixels are excluded and reported in the
    returned warnings list. Returns (recall, warnings).
    """
    if not 0 < k <= 1:
        raise ValueError("k must be in (0, 1]")
    pred = prediction.band(0) != 0
    transform = prediction.transform
    warnings = []
    hits = total = 0
    for i, building in enumerate(test_buildings):
        xs = [p[0] for p in building]
        ys = [p[1] for p in building]
        r_lo = max(0, int(math.floor(transform.world_to_pixel(0, max(ys))[0])) - 1)
        r_hi = min(prediction.height,
                   int(math.ceil(transform.world_to_pixel(0, min(ys))[0])) + 2)
        if r_hi <= r_lo:
            warnings.append(f"building {i} rasterizes to no pixels, excluded")
            continue
        local = rasterize_polygons([(building, [])], transform, prediction.width,
                                   prediction.height, row0=r_lo, nrows=r_hi - r_lo)
        cells = local.astype(bool)
        n_pixels = int(cells.sum())
        if n_pixels == 0:
            warnings.append(f"building {i} rasterizes to no pixels, excluded")
            continue
        covered = int((pred[r_lo:r_hi] & cells).sum())
        total += 1
        if covered / n_pixels >= k:
            hits += 1
    recall = hits / total if total else 0.0
    return recall, warnings


def count_in_windows(footprints: FootprintSet, windows) -> list[int]:
    """Per window, how many footprints intersect it (boundary contact counts)."""
    counts = []
    boxes = [bounding_box(fp.exterior) for fp in footprints]
    for window in windows:
        ring = window.ring() if isinstance(window, CountWindow) else window
        wx0, wy0, wx1, wy1 = bounding_box(ring)
        c = 0
        for fp, (bx0, by0, bx1, by1) in zip(footprints, boxes):
            if bx1 < wx0 or bx0 > wx1 or by1 < wy0 or by0 > wy1:
                continue
            if polygons_intersect(fp.exterior, fp.interiors, ring, []):
                c += 1
        counts.append(c)
    return counts


def r2_score(actual, predicted) -> float:
    """1 - SS_res / SS_tot; undefined (error) for constant actuals."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape or a.size < 2:
        raise ValueError("need two equal-length series of at least 2 values")
    ss_tot = float(((a - a.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ValueError("R^2 undefined: actual counts are constant")
    ss_res = float(((a - p) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def fit_count_adjustment(predicted, actual) -> CountAdjustment:
    """OLS of actual on predicted; rmse is over the adjusted predictions."""
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.size < 2:
        raise ValueError("need two equal-length series of at least 2 values")
    var = float(((p - p.mean()) ** 2).sum())
    if var == 0.0:
        raise ValueError("cannot fit adjustment: predicted counts are constant")
    slope = float(((p - p.mean()) * (a - a.mean())).sum()) / var
    intercept = float(a.mean() - slope * p.mean())
    adjusted = slope * p + intercept
    rmse = float(np.sqrt(((a - adjusted) ** 2).mean()))
    return CountAdjustment(slope=slope, intercept=intercept, rmse=rmse)
