"""Plain 2-D polygon geometry shared across the toolkit.

Rings are lists of (x, y) tuples, closed (first == last). Point-in-polygon is
even-odd with the half-open edge rule, so rasterization and its oracles agree
bit-for-bit on boundary cases.
"""
from __future__ import annotations

import math


def ring_area(ring) -> float:
    """Signed shoelace area; counter-clockwise rings are positive.

    Evaluated relative to the first vertex: for grid-aligned coordinates the
    translated values and their products are exactly representable, so the
    result is exact no matter how large the world offsets are.
    """
    rx, ry = ring[0]
    total = 0.0
    for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
        total += (x0 - rx) * (y1 - ry) - (x1 - rx) * (y0 - ry)
    return 0.5 * total


def polygon_net_area(exterior, interiors=()) -> float:
    area = abs(ring_area(exterior))
    for ring in interiors:
        area -= abs(ring_area(ring))
    return area


def close_ring(ring):
    if ring and ring[0] != ring[-1]:
        return list(ring) + [ring[0]]
    return list(ring)


def ensure_orientation(ring, counter_clockwise: bool):
    if (ring_area(ring) > 0) != counter_clockwise:
        return ring[::-1]
    return ring


def point_in_ring(x: float, y: float, ring) -> bool:
    """Even-odd crossing test, half-open in y, strict in x."""
    inside = False
    for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
        if (y0 > y) != (y1 > y):
            if x < (x1 - x0) * (y - y0) / (y1 - y0) + x0:
                inside = not inside
    return inside


def point_in_polygon(x: float, y: float, exterior, interiors=()) -> bool:
    inside = point_in_ring(x, y, exterior)
    for ring in interiors:
        if point_in_ring(x, y, ring):
            inside = not inside
    return inside


def point_segment_distance(px, py, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def segment_segment_distance(a, b, c, d) -> float:
    if segments_intersect(a, b, c, d):
        return 0.0
    return min(point_segment_distance(a[0], a[1], c[0], c[1], d[0], d[1]),
               point_segment_distance(b[0], b[1], c[0], c[1], d[0], d[1]),
               point_segment_distance(c[0], c[1], a[0], a[1], b[0], b[1]),
               point_segment_distance(d[0], d[1], a[0], a[1], b[0], b[1]))


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    return (min(ax, bx) <= px <= max(ax, bx)) and (min(ay, by) <= py <= max(ay, by))


def segments_intersect(a, b, c, d) -> bool:
    """Inclusive: endpoint touches and collinear overlap count."""
    d1 = _orient(c[0], c[1], d[0], d[1], a[0], a[1])
    d2 = _orient(c[0], c[1], d[0], d[1], b[0], b[1])
    d3 = _orient(a[0], a[1], b[0], b[1], c[0], c[1])
    d4 = _orient(a[0], a[1], b[0], b[1], d[0], d[1])
    if ((d1 > 0) != (d2 > 0) and (d1 < 0) != (d2 < 0)
            and (d3 > 0) != (d4 > 0) and (d3 < 0) != (d4 < 0)):
        return True
    if d1 == 0 and _on_segment(c[0], c[1], d[0], d[1], a[0], a[1]):
        return True
    if d2 == 0 and _on_segment(c[0], c[1], d[0], d[1], b[0], b[1]):
        return True
    if d3 == 0 and _on_segment(a[0], a[1], b[0], b[1], c[0], c[1]):
        return True
    if d4 == 0 and _on_segment(a[0], a[1], b[0], b[1], d[0], d[1]):
        return True
    return False


def ring_self_intersects(ring) -> bool:
    """True when any two non-adjacent edges of a closed ring touch."""
    edges = list(zip(ring[:-1], ring[1:]))
    n = len(edges)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segments_intersect(edges[i][0], edges[i][1], edges[j][0], edges[j][1]):
                return True
    return False


def polygons_intersect(ext_a, ints_a, ext_b, ints_b) -> bool:
    """True when the polygons share any point; boundary contact counts."""
    rings_a = [ext_a] + list(ints_a)
    rings_b = [ext_b] + list(ints_b)
    for ra in rings_a:
        for rb in rings_b:
            for ea in zip(ra[:-1], ra[1:]):
                for eb in zip(rb[:-1], rb[1:]):
                    if segments_intersect(ea[0], ea[1], eb[0], eb[1]):
                        return True
    if point_in_polygon(ext_a[0][0], ext_a[0][1], ext_b, ints_b):
        return True
    if point_in_polygon(ext_b[0][0], ext_b[0][1], ext_a, ints_a):
        return True
    return False


def convex_hull(points):
    """Monotone chain; returns hull vertices counter-clockwise, unclosed."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower = []
    for p in pts:
        while len(lower) >= 2 and _orient(lower[-2][0], lower[-2][1],
                                          lower[-1][0], lower[-1][1], p[0], p[1]) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _orient(upper[-2][0], upper[-2][1],
                                          upper[-1][0], upper[-1][1], p[0], p[1]) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def ring_centroid(ring):
    """Area-weighted centroid of a closed ring."""
    rx, ry = ring[0]
    a = cx = cy = 0.0
    for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
        cross = (x0 - rx) * (y1 - ry) - (x1 - rx) * (y0 - ry)
        a += cross
        cx += ((x0 - rx) + (x1 - rx)) * cross
        cy += ((y0 - ry) + (y1 - ry)) * cross
    if a == 0.0:  # degenerate: fall back to vertex mean
        xs = [p[0] for p in ring[:-1]]
        ys = [p[1] for p in ring[:-1]]
        return (sum(xs) / len(xs), sum(ys) / len(ys))
    return (rx + cx / (3.0 * a), ry + cy / (3.0 * a))


def bounding_box(ring):
    xs = [p[0] for p in ring]
    ys = [p[1] for p in ring]
    return (min(xs), min(ys), max(xs), max(ys))
