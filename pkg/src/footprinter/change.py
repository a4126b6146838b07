"""Multi-epoch comparison: gridded building-count deltas and adjusted totals.

Counting uses the same intersect-the-cell rule as the evaluation windows, so
a footprint straddling a cell border increments every cell it touches; the
audit quantifies the double counting that introduces.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .evaluation import CountAdjustment, CountWindow, count_in_windows
from .geojson_io import FootprintSet
from .geometry import bounding_box


@dataclass
class ChangeGrid:
    cell_size: float
    origin_x: float  # lower-left corner of cell (0, 0), snapped to cell_size
    origin_y: float
    cells: dict = field(default_factory=dict)  # (i, j) -> [count_t0, count_t1]
    audit: dict = field(default_factory=dict)

    def delta(self, key) -> int:
        c0, c1 = self.cells[key]
        return c1 - c0

    def to_geojson(self) -> str:
        features = []
        for (i, j) in sorted(self.cells):
            c0, c1 = self.cells[(i, j)]
            x0 = self.origin_x + i * self.cell_size
            y0 = self.origin_y + j * self.cell_size
            ring = [[x0, y0], [x0 + self.cell_size, y0],
                    [x0 + self.cell_size, y0 + self.cell_size],
                    [x0, y0 + self.cell_size], [x0, y0]]
            features.append({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"count_t0": c0, "count_t1": c1, "delta": c1 - c0},
            })
        return json.dumps({"type": "FeatureCollection", "features": features,
                           "audit": self.audit})


def _extent(footprint_sets):
    boxes = [bounding_box(fp.exterior) for fs in footprint_sets for fp in fs]
    if not boxes:
        return None
    return (min(b[0] for b in boxes), min(b[1] for b in boxes),
            max(b[2] for b in boxes), max(b[3] for b in boxes))


def _cells_touched(footprints: FootprintSet, origin_x, origin_y, cell_size):
    """(i, j) -> count over all cells each footprint's geometry intersects."""
    counts: dict = {}
    for fp in footprints:
        x0, y0, x1, y1 = bounding_box(fp.exterior)
        i0 = int(math.floor((x0 - origin_x) / cell_size))
        i1 = int(math.floor((x1 - origin_x) / cell_size))
        j0 = int(math.floor((y0 - origin_y) / cell_size))
        j1 = int(math.floor((y1 - origin_y) / cell_size))
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                window = CountWindow(origin_x + i * cell_size,
                                     origin_y + j * cell_size, cell_size)
                if count_in_windows(FootprintSet([fp]), [window]) == [1]:
                    counts[(i, j)] = counts.get((i, j), 0) + 1
    return counts


def build_change_grid(footprints_t0: FootprintSet, footprints_t1: FootprintSet,
                      cell_size: float = 500.0) -> ChangeGrid:
    """Per-cell counts for both epochs over a shared snapped grid."""
    if footprints_t0.crs_tag != footprints_t1.crs_tag:
        raise ValueError(f"CRS mismatch: {footprints_t0.crs_tag!r} vs "
                         f"{footprints_t1.crs_tag!r}")
    extent = _extent([footprints_t0, footprints_t1])
    grid = ChangeGrid(cell_size=cell_size, origin_x=0.0, origin_y=0.0)
    if extent is None:
        return grid
    grid.origin_x = math.floor(extent[0] / cell_size) * cell_size
    grid.origin_y = math.floor(extent[1] / cell_size) * cell_size
    t0 = _cells_touched(footprints_t0, grid.origin_x, grid.origin_y, cell_size)
    t1 = _cells_touched(footprints_t1, grid.origin_x, grid.origin_y, cell_size)
    for key in set(t0) | set(t1):
        grid.cells[key] = [t0.get(key, 0), t1.get(key, 0)]
    grid.audit = {
        "footprints_t0": len(footprints_t0),
        "footprints_t1": len(footprints_t1),
        "cell_count_sum_t0": sum(t0.values()),
        "cell_count_sum_t1": sum(t1.values()),
        "double_counted_t0": sum(t0.values()) - len(footprints_t0),
        "double_counted_t1": sum(t1.values()) - len(footprints_t1),
    }
    return grid


def adjusted_totals(footprints: FootprintSet, adjustment: CountAdjustment,
                    window_size: float = 200.0) -> float:
    """Scene-total building estimate: adjust each window's raw count, clamp
    at zero, and sum over a snapped tiling of the footprint extent."""
    extent = _extent([footprints])
    if extent is None:
        return 0.0
    x_start = math.floor(extent[0] / window_size) * window_size
    y_start = math.floor(extent[1] / window_size) * window_size
    total = 0.0
    nx = int(math.ceil((extent[2] - x_start) / window_size))
    ny = int(math.ceil((extent[3] - y_start) / window_size))
    windows = [CountWindow(x_start + i * window_size, y_start + j * window_size,
                           window_size)
               for i in range(max(nx, 1)) for j in range(max(ny, 1))]
    for raw in count_in_windows(footprints, windows):
        total += max(0.0, adjustment.apply(raw))
    return total
