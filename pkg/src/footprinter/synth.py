"""Synthetic scene generator: desk-scale stand-in for proprietary imagery.

Produces color-separable rectangular and L-shaped buildings over a textured
background, the exact truth polygons, a sparse train annotation subset,
count windows with exact ground truth, a dense-validation region and a smooth
DEM. Everything is deterministic under the seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evaluation import CountWindow, count_in_windows
from .geojson_io import Annotation, Footprint, FootprintSet
from .geometry import polygon_net_area
from .grid import GeoRaster, GeoTransform
from .labels import fill_polygon
from .rng import Rng

CONFIDENCE_LEVELS = ("low", "medium", "high")

EASY_BUILDING_TONES = [(185, 92, 78), (200, 120, 90), (170, 80, 95)]
# eight roof tones, the last three rare and two of them close to background
HARD_BUILDING_TONES = [(185, 92, 78), (205, 125, 95), (160, 75, 90),
                       (140, 140, 135), (225, 210, 190), (100, 118, 88),
                       (96, 104, 86), (60, 70, 58)]
HARD_TONE_WEIGHTS = [0.22, 0.2, 0.18, 0.15, 0.12, 0.05, 0.05, 0.03]
BACKGROUND_TONE = (88, 108, 74)
ROAD_TONE = (118, 118, 122)


class PackingError(RuntimeError):
    """Could not place the requested buildings with the required spacing."""


@dataclass
class SynthSpec:
    width_px: int = 2048
    height_px: int = 2048
    pixel_size: float = 0.5
    origin_x: float = 100000.0
    origin_y: float = 200000.0
    building_count: int = 300
    train_count: int = 150
    min_side_m: float = 7.0
    max_side_m: float = 18.0
    l_shape_fraction: float = 0.35
    min_gap_m: float = 2.5
    color_mode: str = "easy"  # "easy" | "hard"
    noise_sigma: float = 8.0
    background_annotations: int = 20
    road_count: int = 2
    window_count: int = 29
    window_size_m: float = 200.0
    val_region_m: float = 250.0
    seed: int = 0
    max_tries_per_building: int = 200


@dataclass
class SynthScene:
    imagery: GeoRaster
    truth: FootprintSet
    annotations: list  # train split (building + background + road)
    windows: list  # CountWindow with exact actual_count
    val_region: list  # closed world ring
    train_ids: list
    test_ids: list
    dem: GeoRaster | None = None
    spec: SynthSpec | None = None


def _building_polygon(rng: Rng, x0, y0, w, h, l_shaped: bool):
    if not l_shaped:
        ring = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)]
    else:
        cut_w = w * rng.uniform_range(0.35, 0.6)
        cut_h = h * rng.uniform_range(0.35, 0.6)
        corner = rng.bounded(4)
        if corner == 0:  # cut NE
            ring = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h - cut_h),
                    (x0 + w - cut_w, y0 + h - cut_h), (x0 + w - cut_w, y0 + h),
                    (x0, y0 + h)]
        elif corner == 1:  # cut SE
            ring = [(x0, y0), (x0 + w - cut_w, y0), (x0 + w - cut_w, y0 + cut_h),
                    (x0 + w, y0 + cut_h), (x0 + w, y0 + h), (x0, y0 + h)]
        elif corner == 2:  # cut SW
            ring = [(x0 + cut_w, y0), (x0 + w, y0), (x0 + w, y0 + h),
                    (x0, y0 + h), (x0, y0 + cut_h), (x0 + cut_w, y0 + cut_h)]
        else:  # cut NW
            ring = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h),
                    (x0 + cut_w, y0 + h), (x0 + cut_w, y0 + h - cut_h),
                    (x0, y0 + h - cut_h)]
    return ring + [ring[0]]


def _boxes_clash(box, others, gap):
    x0, y0, x1, y1 = box
    for ox0, oy0, ox1, oy1 in others:
        if x0 - gap < ox1 and x1 + gap > ox0 and y0 - gap < oy1 and y1 + gap > oy0:
            return True
    return False


def _pick_tone(rng: Rng, mode: str):
    if mode == "hard":
        u = rng.uniform()
        acc = 0.0
        for tone, wgt in zip(HARD_BUILDING_TONES, HARD_TONE_WEIGHTS):
            acc += wgt
            if u < acc:
                return tone
        return HARD_BUILDING_TONES[-1]
    return EASY_BUILDING_TONES[rng.bounded(len(EASY_BUILDING_TONES))]


def generate_synthetic_scene(spec: SynthSpec) -> SynthScene:
    rng = Rng(spec.seed)
    transform = GeoTransform(spec.origin_x, spec.origin_y, spec.pixel_size)
    width_m = spec.width_px * spec.pixel_size
    height_m = spec.height_px * spec.pixel_size
    x_lo, y_hi = spec.origin_x, spec.origin_y
    y_lo = y_hi - height_m

    # road strips (horizontal bands in world y)
    road_rings = []
    road_boxes = []
    for _ in range(spec.road_count):
        road_w = rng.uniform_range(6.0, 9.0)
        yc = y_lo + rng.uniform_range(0.12, 0.88) * height_m
        ring = [(x_lo, yc), (x_lo + width_m, yc), (x_lo + width_m, yc + road_w),
                (x_lo, yc + road_w), (x_lo, yc)]
        road_rings.append(ring)
        road_boxes.append((x_lo, yc, x_lo + width_m, yc + road_w))

    # place buildings: axis-aligned bounding boxes at least min_gap_m apart
    placed_boxes = list(road_boxes)
    footprints = []
    for b in range(spec.building_count):
        for attempt in range(spec.max_tries_per_building + 1):
            if attempt == spec.max_tries_per_building:
                raise PackingError(
                    f"placed {b} of {spec.building_count} buildings; scene too dense")
            w = rng.uniform_range(spec.min_side_m, spec.max_side_m)
            h = rng.uniform_range(spec.min_side_m, spec.max_side_m)
            x0 = x_lo + rng.uniform() * (width_m - w - 2) + 1
            y0 = y_lo + rng.uniform() * (height_m - h - 2) + 1
            if _boxes_clash((x0, y0, x0 + w, y0 + h), placed_boxes, spec.min_gap_m):
                continue
            l_shaped = rng.uniform() < spec.l_shape_fraction
            ring = _building_polygon(rng, x0, y0, w, h, l_shaped)
            placed_boxes.append((x0, y0, x0 + w, y0 + h))
            fp = Footprint(id=f"t{b + 1:05d}", exterior=ring)
            fp.area_m2 = polygon_net_area(ring)
            footprints.append(fp)
            break
    truth = FootprintSet(footprints)

    # render imagery: background texture, roads, buildings, additive noise
    shape = (spec.height_px, spec.width_px)
    owner = np.zeros(shape, dtype=np.int32)  # 0 bg, -1 road, i+1 building i
    for ring in road_rings:
        fill_polygon(owner, [_ring_pixels(ring, transform)], -1)
    for i, fp in enumerate(footprints):
        fill_polygon(owner, [_ring_pixels(fp.exterior, transform)], i + 1)
    img = np.empty((3, *shape), dtype=np.float64)
    for c in range(3):
        img[c].fill(BACKGROUND_TONE[c])
        img[c][owner == -1] = ROAD_TONE[c]
    tones = [_pick_tone(rng, spec.color_mode) for _ in footprints]
    for i, tone in enumerate(tones):
        sel = owner == i + 1
        for c in range(3):
            img[c][sel] = tone[c]
    if spec.noise_sigma > 0:
        noise = rng.bulk_normal(3 * shape[0] * shape[1], spec.noise_sigma)
        img += noise.reshape(3, *shape)
    imagery = GeoRaster(np.clip(np.rint(img), 0, 255).astype(np.uint8),
                        transform, "u8", crs_tag="synth-tm")

    # smooth DEM: tilted plane plus gaussian hills
    rows = np.arange(spec.height_px)[:, None] * spec.pixel_size
    cols = np.arange(spec.width_px)[None, :] * spec.pixel_size
    dem_z = 0.02 * cols + 0.01 * rows
    for _ in range(4):
        cx = rng.uniform() * width_m
        cy = rng.uniform() * height_m
        amp = rng.uniform_range(5.0, 25.0)
        rad = rng.uniform_range(80.0, 300.0)
        dem_z = dem_z + amp * np.exp(-((cols - cx) ** 2 + (rows - cy) ** 2)
                                     / (2 * rad * rad))
    dem = GeoRaster(dem_z.astype(np.float32), transform, "f32", crs_tag="synth-tm")

    # validation region: centered square with dense truth, never more than a
    # third of the scene so small test scenes keep trainable buildings outside
    half = min(spec.val_region_m, min(width_m, height_m) / 3.0) / 2.0
    cx = x_lo + width_m / 2.0
    cy = y_lo + height_m / 2.0
    val_region = [(cx - half, cy - half), (cx + half, cy - half),
                  (cx + half, cy + half), (cx - half, cy + half),
                  (cx - half, cy - half)]

    # train split: sampled from buildings clear of the validation region
    eligible = [i for i, box in enumerate(placed_boxes[len(road_boxes):])
                if not (box[0] < cx + half and box[2] > cx - half
                        and box[1] < cy + half and box[3] > cy - half)]
    train_n = min(spec.train_count, len(eligible))
    train_pick = sorted(eligible[i] for i in rng.sample_indices(len(eligible), train_n))
    train_set = set(train_pick)
    annotations = []
    for i in train_pick:
        fp = footprints[i]
        annotations.append(Annotation(
            exterior=fp.exterior, category="building",
            confidence=CONFIDENCE_LEVELS[rng.bounded(3)], id=f"a-{fp.id}"))
    for ring in road_rings:
        annotations.append(Annotation(exterior=ring, category="road",
                                      confidence="high",
                                      id=f"a-road{len(annotations)}"))
    placed = 0
    guard = 0
    while placed < spec.background_annotations and guard < 100 * (spec.background_annotations + 1):
        guard += 1
        s = rng.uniform_range(15.0, 45.0)
        x0 = x_lo + rng.uniform() * (width_m - s)
        y0 = y_lo + rng.uniform() * (height_m - s)
        if _boxes_clash((x0, y0, x0 + s, y0 + s), placed_boxes, 0.0):
            continue
        ring = [(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s), (x0, y0)]
        annotations.append(Annotation(exterior=ring, category="background",
                                      confidence=CONFIDENCE_LEVELS[rng.bounded(3)],
                                      id=f"a-bg{placed}"))
        placed += 1

    # count windows with exact truth
    windows = []
    for _ in range(spec.window_count):
        wx = x_lo + rng.uniform() * max(width_m - spec.window_size_m, 0.0)
        wy = y_lo + rng.uniform() * max(height_m - spec.window_size_m, 0.0)
        windows.append(CountWindow(wx, wy, spec.window_size_m))
    for window, count in zip(windows, count_in_windows(truth, windows)):
        window.actual_count = count

    train_ids = [footprints[i].id for i in train_pick]
    test_ids = [fp.id for i, fp in enumerate(footprints) if i not in train_set]
    return SynthScene(imagery=imagery, truth=truth, annotations=annotations,
                      windows=windows, val_region=val_region,
                      train_ids=train_ids, test_ids=test_ids, dem=dem, spec=spec)


def _ring_pixels(ring, transform: GeoTransform):
    return [transform.world_to_pixel(x, y)[::-1] for x, y in ring]
