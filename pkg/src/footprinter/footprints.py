"""Prediction raster -> building polygons, streamed in bounded memory.

The pipeline is threshold -> 7x7 median filter -> 4-connected components ->
pixel-edge boundary tracing -> Douglas-Peucker -> minimum-area filter. Strips
of rows are the streaming unit; the median filter reads a halo so results are
bit-identical for any strip height, and component labels depend only on scan
order, so the final polygons are too.
"""
from __future__ import annotations

import math

import numpy as np

from .geojson_io import Footprint, FootprintSet
from .grid import DTYPES, GeoRaster, GeoTransform


def median_filter(mask: np.ndarray, kernel: int = 7) -> np.ndarray:
    """Majority vote over a kernel x kernel window of a binary mask.

    Edge pixels replicate the border. Exact integer arithmetic: output is 1
    iff more than half of the kernel**2 samples are 1.
    """
    if kernel % 2 != 1 or kernel < 1:
        raise ValueError("kernel must be odd and positive")
    half = kernel // 2
    padded = np.pad(mask.astype(np.int32), half, mode="edge")
    s = padded.cumsum(axis=0).cumsum(axis=1)
    s = np.pad(s, ((1, 0), (1, 0)))
    h, w = mask.shape
    win = (s[kernel:kernel + h, kernel:kernel + w] - s[:h, kernel:kernel + w]
           - s[kernel:kernel + h, :w] + s[:h, :w])
    return (win * 2 > kernel * kernel).astype(np.uint8)


def _row_runs(row: np.ndarray):
    """Half-open [start, end) column runs of nonzero samples."""
    d = np.diff(np.concatenate(([0], row.view(np.uint8) != 0, [0])).astype(np.int8))
    return np.flatnonzero(d == 1), np.flatnonzero(d == -1)


class ComponentScanner:
    """Incremental 4-connected run labeling with union-find.

    Feed strips of binary rows top to bottom; labels are provisional until
    finish(), which resolves unions and orders components by first appearance
    in scan order, making the result independent of strip height.
    """

    def __init__(self):
        self._parent: list[int] = []
        self._prev: list[tuple[int, int, int]] = []  # (start, end, label) of previous row
        self._next_row = None
        self.run_rows: list[int] = []
        self.run_bounds: list[tuple[int, int]] = []
        self.run_labels: list[int] = []

    def _find(self, x: int) -> int:
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def _union(self, a: int, b: int) -> int:
        ra, rb = self._find(a), self._find(b)
        if ra == rb:
            return ra
        if ra > rb:  # keep the smaller (earlier) label as root
            ra, rb = rb, ra
        self._parent[rb] = ra
        return ra

    def feed(self, strip: np.ndarray, row0: int) -> None:
        if self._next_row is not None and row0 != self._next_row:
            raise ValueError("strips must be fed in order without gaps")
        for i in range(strip.shape[0]):
            starts, ends = _row_runs(strip[i])
            row = row0 + i
            current = []
            prev = self._prev
            pi = 0
            for s, e in zip(starts.tolist(), ends.tolist()):
                label = -1
                while pi < len(prev) and prev[pi][1] <= s:
                    pi += 1
                pj = pi
                while pj < len(prev) and prev[pj][0] < e:
                    label = prev[pj][2] if label < 0 else self._union(label, prev[pj][2])
                    pj += 1
                if label < 0:
                    label = len(self._parent)
                    self._parent.append(label)
                else:
                    label = self._find(label)
                current.append((s, e, label))
                self.run_rows.append(row)
                self.run_bounds.append((s, e))
                self.run_labels.append(label)
            self._prev = current
        self._next_row = row0 + strip.shape[0]

    def finish(self):
        """Returns a list of components, each a list of (row, start, end) runs."""
        roots = [self._find(l) for l in self.run_labels]
        order: dict[int, int] = {}
        for r in roots:
            if r not in order:
                order[r] = len(order)
        components = [[] for _ in range(len(order))]
        for row, (s, e), root in zip(self.run_rows, self.run_bounds, roots):
            components[order[root]].append((row, s, e))
        return components


def connected_components(mask: GeoRaster, connectivity: int = 4) -> GeoRaster:
    """Label a binary raster; 0 stays background, components get ids 1..K."""
    if connectivity != 4:
        raise ValueError("only 4-connectivity is supported")
    scanner = ComponentScanner()
    scanner.feed(mask.band(0), 0)
    components = scanner.finish()
    labels = np.zeros((mask.height, mask.width), dtype=DTYPES["u32"])
    for k, runs in enumerate(components, start=1):
        for row, s, e in runs:
            labels[row, s:e] = k
    return GeoRaster(labels, mask.transform, "u32", nodata=None,
                     crs_tag=mask.crs_tag)


def _runs_to_mask(runs):
    rows = [r for r, _, _ in runs]
    r0, r1 = min(rows), max(rows)
    c0 = min(s for _, s, _ in runs)
    c1 = max(e for _, _, e in runs)
    m = np.zeros((r1 - r0 + 1, c1 - c0), dtype=np.uint8)
    for row, s, e in runs:
        m[row - r0, s - c0:e - c0] = 1
    return m, r0, c0


# clockwise quarter turn of a (d_row, d_col) step, in the (x=col, y=row) plane
_CW = {(0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0), (1, 0): (0, 1)}


def trace_cell_mask(mask: np.ndarray, row_off: int = 0, col_off: int = 0):
    """Boundary rings of a binary cell mask in pixel-corner coordinates.

    Returns a list of (ring, signed_area) where vertices are integer
    (row, col) corners, rings are closed, and the signed area is the exact
    shoelace area in the (col, row) plane: positive for the exterior ring,
    negative for holes. Within one 4-connected component there is exactly one
    positive ring.
    """
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = mask != 0
    inside = padded[1:-1, 1:-1].astype(bool)
    edges = []
    # (dr_nb, dc_nb) outside neighbor  ->  directed edge with interior on left
    for (nr, nc), (tail, head) in (
        ((-1, 0), ((0, 0), (0, 1))),   # open to the north: top edge, eastward
        ((0, 1), ((0, 1), (1, 1))),    # east: right edge, southward
        ((1, 0), ((1, 1), (1, 0))),    # south: bottom edge, westward
        ((0, -1), ((1, 0), (0, 0))),   # west: left edge, northward
    ):
        exposed = inside & (padded[1 + nr:padded.shape[0] - 1 + nr,
                                   1 + nc:padded.shape[1] - 1 + nc] == 0)
        for r, c in np.argwhere(exposed).tolist():
            edges.append(((r + tail[0], c + tail[1]), (r + head[0], c + head[1])))
    edges.sort()
    out_map: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for tail, head in edges:
        out_map.setdefault(tail, []).append(head)
    used: set[tuple] = set()
    rings = []
    for start in edges:
        if start in used:
            continue
        verts = []
        edge = start
        prev_dir = None
        while True:
            used.add(edge)
            tail, head = edge
            direction = (head[0] - tail[0], head[1] - tail[1])
            if prev_dir is not None and direction != prev_dir:
                verts.append(tail)
            prev_dir = direction
            candidates = out_map[head]
            if len(candidates) == 1:
                nxt = candidates[0]
            else:
                # pinch vertex: take the clockwise turn, which keeps the two
                # rings passing through it from crossing
                turn = _CW[direction]
                nxt = (head[0] + turn[0], head[1] + turn[1])
            edge = (head, nxt)
            if edge == start:
                break
        tail0, head0 = start
        if (head0[0] - tail0[0], head0[1] - tail0[1]) != prev_dir:
            verts = [tail0] + verts
        area2 = 0
        for (r0, c0), (r1, c1) in zip(verts, verts[1:] + verts[:1]):
            area2 += c0 * r1 - c1 * r0  # shoelace in the (x=col, y=row) plane
        ring = [(r + row_off, c + col_off) for r, c in verts]
        ring.append(ring[0])
        rings.append((ring, area2 / 2.0))
    return rings


def _pixel_rings_to_world(rings, transform: GeoTransform):
    """Split traced rings into one exterior and holes, in world coordinates.

    The (col, row) plane is mirrored relative to world coordinates, so rings
    are reversed: the exterior comes out counter-clockwise, holes clockwise.
    """
    exterior, interiors = None, []
    for ring, area in rings:
        world = [transform.pixel_to_world(r, c) for r, c in ring][::-1]
        if area > 0:
            if exterior is not None:
                raise AssertionError("component traced to multiple exterior rings")
            exterior = world
        else:
            interiors.append(world)
    return exterior, interiors


def trace_boundaries(labels: GeoRaster, component_id: int):
    """Exterior and interior rings of one labeled component, world coords."""
    where = labels.band(0) == component_id
    if not where.any():
        raise ValueError(f"component {component_id} not present")
    rows = np.flatnonzero(where.any(axis=1))
    cols = np.flatnonzero(where.any(axis=0))
    r0, r1 = rows[0], rows[-1]
    c0, c1 = cols[0], cols[-1]
    sub = where[r0:r1 + 1, c0:c1 + 1].astype(np.uint8)
    rings = trace_cell_mask(sub, int(r0), int(c0))
    return _pixel_rings_to_world(rings, labels.transform)


def _point_segment_dist2(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return (px - ax) ** 2 + (py - ay) ** 2
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    t = min(1.0, max(0.0, t))
    return (px - ax - t * dx) ** 2 + (py - ay - t * dy) ** 2


def _dp_open(points, tol2: float):
    """Iterative Douglas-Peucker on an open polyline; keeps endpoints."""
    n = len(points)
    keep = [False] * n
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        ax, ay = points[lo]
        bx, by = points[hi]
        worst, at = -1.0, lo + 1
        for i in range(lo + 1, hi):
            d2 = _point_segment_dist2(points[i][0], points[i][1], ax, ay, bx, by)
            if d2 > worst:
                worst, at = d2, i
        if worst > tol2:
            keep[at] = True
            stack.append((lo, at))
            stack.append((at, hi))
    return [p for p, k in zip(points, keep) if k]


def _farthest_pair(pts: np.ndarray):
    """Indices (i, j), i < j, of the mutually farthest vertices.

    Ties resolve to the lexicographically smallest (i, j). Chunked so memory
    stays O(n) even for long rings.
    """
    n = len(pts)
    best = (-1.0, 0, 1)
    chunk = max(1, min(256, n))
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        d2 = ((pts[i0:i1, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        cols = np.arange(n)[None, :]
        rows = np.arange(i0, i1)[:, None]
        d2[cols <= rows] = -np.inf
        flat = int(np.argmax(d2))
        r, c = divmod(flat, n)
        val = float(d2[r, c])
        if val > best[0]:
            best = (val, i0 + r, c)
    return best[1], best[2]


def simplify_ring(ring, tolerance: float = 0.5):
    """Douglas-Peucker on a closed ring, split at its two farthest vertices.

    Splitting at the diameter removes the arbitrary-start-vertex artifact of
    running DP on an unrolled ring. Deviation is distance to the chord
    segment; vertices at exactly the tolerance are dropped.
    """
    if len(ring) < 4 or ring[0] != ring[-1]:
        raise ValueError("ring must be closed with >= 4 vertices")
    distinct = list(ring[:-1])
    i, j = _farthest_pair(np.asarray(distinct, dtype=np.float64))
    tol2 = tolerance * tolerance
    half_a = _dp_open(distinct[i:j + 1], tol2)
    half_b = _dp_open(distinct[j:] + distinct[:i + 1], tol2)
    out = half_a[:-1] + half_b[:-1]
    out.append(out[0])
    return out


def filter_area(footprints, min_area: float = 30.0) -> list:
    """Drop footprints whose net area (exterior minus holes) is below min_area."""
    return [fp for fp in footprints if fp.net_area() >= min_area]


def binarize_block(block: np.ndarray, sample_type: str, nodata, threshold: float) -> np.ndarray:
    """Probability rasters threshold at `threshold`; class rasters take any nonzero."""
    if sample_type == "f32":
        return (block >= threshold).astype(np.uint8)
    binary = (block != 0)
    if nodata is not None:
        binary &= (block != nodata)
    return binary.astype(np.uint8)


def polygonize(prediction, threshold: float = 0.5, tile_size: int = 1024,
               dp_tolerance: float = 0.5, min_area: float = 30.0,
               median_kernel: int = 7) -> FootprintSet:
    """Full raster -> footprint pipeline, streamed over row strips.

    `prediction` is any raster with read_window (GeoRaster or GridSource).
    Output is independent of tile_size; memory stays O(strip + components).
    """
    height, width = prediction.height, prediction.width
    transform = prediction.transform
    halo = median_kernel // 2
    tile_size = max(1, min(tile_size, height))
    scanner = ComponentScanner()
    for r0 in range(0, height, tile_size):
        r1 = min(r0 + tile_size, height)
        top = min(halo, r0)
        bottom = min(halo, height - r1)
        block = prediction.read_window(r0 - top, 0, (r1 - r0) + top + bottom, width)
        binary = binarize_block(block, prediction.sample_type, prediction.nodata,
                                threshold)
        filtered = median_filter(binary, median_kernel)
        scanner.feed(filtered[top:top + (r1 - r0)], r0)
    components = scanner.finish()
    footprints = []
    for runs in components:
        pixel_count = sum(e - s for _, s, e in runs)
        sub, row_off, col_off = _runs_to_mask(runs)
        rings = trace_cell_mask(sub, row_off, col_off)
        exterior, interiors = _pixel_rings_to_world(rings, transform)
        exterior = simplify_ring(exterior, dp_tolerance)
        interiors = [simplify_ring(r, dp_tolerance) for r in interiors]
        fp = Footprint(id="", exterior=exterior, interiors=interiors)
        fp.area_m2 = fp.net_area()
        fp.pixel_count = pixel_count
        footprints.append(fp)
    kept = filter_area(footprints, min_area)
    for k, fp in enumerate(kept, start=1):
        fp.id = f"b{k:05d}"
    return FootprintSet(kept, crs_tag=getattr(prediction, "crs_tag", "local"))
