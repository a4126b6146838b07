"""Sparse annotations -> per-pixel training masks.

Label codes: background 0, building 1, road 2, unknown 255. Unknown is the
default everywhere an annotation does not cover; no operation here ever
treats it as a class. Rasterization labels a pixel iff its center falls
inside a polygon (even-odd, half-open edge rule).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GeoRaster, GeoTransform
from .rng import Rng

BACKGROUND, BUILDING, ROAD, UNKNOWN = 0, 1, 2, 255
CATEGORY_CODES = {"background": BACKGROUND, "building": BUILDING, "road": ROAD}
# lowest priority first: later fills win on overlap
FILL_ORDER = ("background", "road", "building")


@dataclass
class SparseLabelMask:
    labels: np.ndarray  # u8 (height, width)
    transform: GeoTransform

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def height(self):
        return self.labels.shape[0]

    def to_raster(self) -> GeoRaster:
        return GeoRaster(self.labels, self.transform, "u8", nodata=UNKNOWN)

    @classmethod
    def from_raster(cls, raster: GeoRaster) -> "SparseLabelMask":
        return cls(np.array(raster.band(0)), raster.transform)


def _ring_to_pixel(ring, transform: GeoTransform):
    """World ring -> (x=col, y=row) pixel-space ring."""
    return [transform.world_to_pixel(x, y)[::-1] for x, y in ring]


def fill_polygon(target: np.ndarray, rings_pixel, value: int, row0: int = 0) -> None:
    """Scanline-fill pixel centers inside a polygon (all rings, even-odd).

    `target` covers grid rows [row0, row0 + target.shape[0]). A center is
    inside iff an odd number of edge crossings lie strictly to its right,
    matching the classic per-point crossing test exactly.
    """
    nrows, ncols = target.shape
    edges = []
    ymin, ymax = math.inf, -math.inf
    for ring in rings_pixel:
        for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
            if y0 != y1:
                edges.append((x0, y0, x1, y1))
                ymin = min(ymin, y0, y1)
                ymax = max(ymax, y0, y1)
    if not edges:
        return
    r_first = max(row0, int(math.floor(ymin - 0.5)))
    r_last = min(row0 + nrows - 1, int(math.ceil(ymax)))
    for r in range(r_first, r_last + 1):
        y = r + 0.5
        xs = []
        for x0, y0, x1, y1 in edges:
            if (y0 > y) != (y1 > y):
                xs.append((x1 - x0) * (y - y0) / (y1 - y0) + x0)
        if not xs:
            continue
        xs.sort()
        for k in range(0, len(xs) - 1, 2):
            c0 = max(0, math.ceil(xs[k] - 0.5))
            c1 = min(ncols - 1, math.ceil(xs[k + 1] - 0.5) - 1)
            if c0 <= c1:
                target[r - row0, c0:c1 + 1] = value


def rasterize_polygons(polygons, transform: GeoTransform, width: int, height: int,
                       row0: int = 0, nrows: int | None = None) -> np.ndarray:
    """Binary mask of pixel centers covered by any (exterior, interiors) polygon."""
    nrows = height if nrows is None else nrows
    out = np.zeros((nrows, width), dtype=np.uint8)
    for exterior, interiors in polygons:
        rings = [_ring_to_pixel(exterior, transform)]
        rings += [_ring_to_pixel(r, transform) for r in interiors]
        fill_polygon(out, rings, 1, row0)
    return out


def rasterize_annotations(annotations, transform: GeoTransform, width: int,
                          height: int):
    """Burn annotations into a label mask; returns (mask, warnings).

    Overlaps resolve building > road > background. Annotations entirely
    outside the grid are skipped with a warning.
    """
    labels = np.full((height, width), UNKNOWN, dtype=np.uint8)
    warnings = []
    by_category = {c: [] for c in FILL_ORDER}
    for ann in annotations:
        ring = _ring_to_pixel(ann.exterior, transform)
        xs = [p[0] for p in ring]
        ys = [p[1] for p in ring]
        if max(xs) <= 0 or min(xs) >= width or max(ys) <= 0 or min(ys) >= height:
            warnings.append(f"annotation {ann.id!r} entirely outside grid, skipped")
            continue
        by_category[ann.category].append(ann)
    for category in FILL_ORDER:
        code = CATEGORY_CODES[category]
        for ann in by_category[category]:
            rings = [_ring_to_pixel(ann.exterior, transform)]
            rings += [_ring_to_pixel(r, transform) for r in ann.interiors]
            fill_polygon(labels, rings, code)
    return SparseLabelMask(labels, transform), warnings


def _disc_offsets(radius_px: float):
    r = int(math.floor(radius_px))
    offsets = []
    for dr in range(-r, r + 1):
        for dc in range(-r, r + 1):
            if dr * dr + dc * dc <= radius_px * radius_px:
                offsets.append((dr, dc))
    return offsets


def buffer_buildings(mask: SparseLabelMask, radius: float = 2.0) -> SparseLabelMask:
    """Turn unknown pixels near buildings into background.

    A pixel converts iff its center is within Euclidean `radius` meters of
    some building pixel center (inclusive). Labeled pixels are never touched.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    labels = mask.labels
    building = labels == BUILDING
    near = np.zeros_like(building)
    h, w = labels.shape
    for dr, dc in _disc_offsets(radius / mask.transform.pixel_size):
        src_r0, src_r1 = max(0, -dr), min(h, h - dr)
        src_c0, src_c1 = max(0, -dc), min(w, w - dc)
        if src_r0 >= src_r1 or src_c0 >= src_c1:
            continue
        near[src_r0 + dr:src_r1 + dr, src_c0 + dc:src_c1 + dc] |= \
            building[src_r0:src_r1, src_c0:src_c1]
    out = labels.copy()
    out[(labels == UNKNOWN) & near] = BACKGROUND
    return SparseLabelMask(out, mask.transform)


def merge_roads(mask: SparseLabelMask) -> SparseLabelMask:
    """Relabel every road pixel as background; nothing else changes."""
    out = mask.labels.copy()
    out[out == ROAD] = BACKGROUND
    return SparseLabelMask(out, mask.transform)


def subsample_annotations(annotations: list, n: int, seed: int) -> list:
    """Uniform n-subset without replacement, deterministic for a fixed seed."""
    if not 0 <= n <= len(annotations):
        raise ValueError(f"cannot take {n} of {len(annotations)} annotations")
    idx = Rng(seed).sample_indices(len(annotations), n)
    return [annotations[i] for i in sorted(idx)]
