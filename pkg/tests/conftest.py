"""Shared test helpers: independent oracle implementations.

Everything here is deliberately written the straightforward way (per-pixel
loops, recursion, brute force) so production code is checked against code
that shares no logic with it.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from footprinter.rng import Rng


def oracle_point_in_rings(x: float, y: float, rings) -> bool:
    """Classic even-odd crossing test over all rings of one polygon."""
    inside = False
    for ring in rings:
        n = len(ring) - 1
        for i in range(n):
            xi, yi = ring[i]
            xj, yj = ring[i + 1]
            if (yi > y) != (yj > y):
                if x < (xj - xi) * (y - yi) / (yj - yi) + xi:
                    inside = not inside
    return inside


def oracle_rasterize(rings, transform, width, height) -> np.ndarray:
    """Per-pixel-center point-in-polygon, the slow way."""
    out = np.zeros((height, width), dtype=np.uint8)
    pixel_rings = [[transform.world_to_pixel(px, py)[::-1] for px, py in ring]
                   for ring in rings]
    for r in range(height):
        for c in range(width):
            if oracle_point_in_rings(c + 0.5, r + 0.5, pixel_rings):
                out[r, c] = 1
    return out


def oracle_median7(mask: np.ndarray, kernel: int = 7) -> np.ndarray:
    """Majority of the kernel**2 samples via explicit sorting."""
    half = kernel // 2
    padded = np.pad(mask, half, mode="edge")
    out = np.zeros_like(mask)
    for r in range(mask.shape[0]):
        for c in range(mask.shape[1]):
            window = np.sort(padded[r:r + kernel, c:c + kernel].ravel())
            out[r, c] = window[window.size // 2]
    return out


def oracle_flood_fill(mask: np.ndarray):
    """4-connected components by explicit flood fill; labels in scan order."""
    labels = np.zeros(mask.shape, dtype=np.int32)
    nxt = 0
    for r0 in range(mask.shape[0]):
        for c0 in range(mask.shape[1]):
            if mask[r0, c0] and labels[r0, c0] == 0:
                nxt += 1
                stack = [(r0, c0)]
                labels[r0, c0] = nxt
                while stack:
                    r, c = stack.pop()
                    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        rr, cc = r + dr, c + dc
                        if (0 <= rr < mask.shape[0] and 0 <= cc < mask.shape[1]
                                and mask[rr, cc] and labels[rr, cc] == 0):
                            labels[rr, cc] = nxt
                            stack.append((rr, cc))
    return labels, nxt


def _oracle_seg_dist2(p, a, b) -> float:
    """Squared point-to-segment distance; squared comparisons keep ties
    identical to the implementation under test."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    if dx == dy == 0:
        return (p[0] - a[0]) ** 2 + (p[1] - a[1]) ** 2
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
    t = min(1.0, max(0.0, t))
    return (p[0] - a[0] - t * dx) ** 2 + (p[1] - a[1] - t * dy) ** 2


def _oracle_dp_recursive(points, tolerance):
    """Textbook recursive Douglas-Peucker on an open polyline."""
    if len(points) <= 2:
        return list(points)
    worst, at = -1.0, 1
    for i in range(1, len(points) - 1):
        d2 = _oracle_seg_dist2(points[i], points[0], points[-1])
        if d2 > worst:
            worst, at = d2, i
    if worst <= tolerance * tolerance:
        return [points[0], points[-1]]
    left = _oracle_dp_recursive(points[:at + 1], tolerance)
    right = _oracle_dp_recursive(points[at:], tolerance)
    return left[:-1] + right


def oracle_simplify_ring(ring, tolerance):
    """Reference closed-ring simplification: brute-force diameter split plus
    recursive DP on the two halves."""
    distinct = list(ring[:-1])
    best = (-1.0, 0, 1)
    for i in range(len(distinct)):
        for j in range(i + 1, len(distinct)):
            d2 = ((distinct[i][0] - distinct[j][0]) ** 2
                  + (distinct[i][1] - distinct[j][1]) ** 2)
            if d2 > best[0]:
                best = (d2, i, j)
    _, i, j = best
    half_a = _oracle_dp_recursive(distinct[i:j + 1], tolerance)
    half_b = _oracle_dp_recursive(distinct[j:] + distinct[:i + 1], tolerance)
    out = half_a[:-1] + half_b[:-1]
    return out + [out[0]]


def random_rectilinear_ring(rng: Rng, max_extent: int = 24, pixel_size: float = 0.5):
    """Traced boundary of a random connected blob: a realistic closed
    rectilinear ring in world coordinates."""
    from footprinter.footprints import ComponentScanner, _runs_to_mask, trace_cell_mask
    from footprinter.grid import GeoTransform

    h = 4 + rng.bounded(max_extent - 3)
    w = 4 + rng.bounded(max_extent - 3)
    while True:
        mask = (rng.bulk_uniform(h * w).reshape(h, w) < 0.6).astype(np.uint8)
        scanner = ComponentScanner()
        scanner.feed(mask, 0)
        components = scanner.finish()
        if not components:
            continue
        runs = max(components, key=lambda rs: sum(e - s for _, s, e in rs))
        sub, r0, c0 = _runs_to_mask(runs)
        rings = trace_cell_mask(sub, r0, c0)
        exterior = max(rings, key=lambda ra: ra[1])[0]
        if len(exterior) >= 5:
            transform = GeoTransform(0.0, 0.0, pixel_size)
            return [transform.pixel_to_world(r, c) for r, c in exterior][::-1]


@pytest.fixture
def rng():
    return Rng(20260810)
