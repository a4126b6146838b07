import math

import numpy as np
import pytest

from conftest import (oracle_flood_fill, oracle_median7, oracle_point_in_rings,
                      oracle_simplify_ring, random_rectilinear_ring)
from footprinter.footprints import (ComponentScanner, connected_components,
                                    filter_area, median_filter, polygonize,
                                    simplify_ring, trace_boundaries)
from footprinter.geojson_io import Footprint, write_footprints
from footprinter.geometry import point_segment_distance, polygon_net_area
from footprinter.grid import GeoRaster, GeoTransform
from footprinter.rng import Rng

T = GeoTransform(0.0, 0.0, 0.5)


def _random_mask(rng, h, w, density=0.5):
    return (rng.bulk_uniform(h * w).reshape(h, w) < density).astype(np.uint8)


# median filter -------------------------------------------------------------

def test_median_all_ones_invariant():
    assert (median_filter(np.ones((10, 12), dtype=np.uint8)) == 1).all()


def test_median_isolated_pixel_removed():
    mask = np.zeros((11, 11), dtype=np.uint8)
    mask[5, 5] = 1
    assert median_filter(mask).sum() == 0


def test_median_matches_bruteforce_oracle():
    rng = Rng(31)
    for trial in range(500):
        h, w = 7 + rng.bounded(10), 7 + rng.bounded(10)
        mask = _random_mask(rng, h, w)
        assert (median_filter(mask) == oracle_median7(mask)).all(), trial


def test_median_rejects_even_kernel():
    with pytest.raises(ValueError):
        median_filter(np.zeros((4, 4), dtype=np.uint8), kernel=4)


# connected components -------------------------------------------------------

def _partition_signature(labels):
    """Map each component to its frozen pixel set, ignoring label numbering."""
    comps = {}
    for r, c in np.argwhere(labels > 0):
        comps.setdefault(labels[r, c], set()).add((int(r), int(c)))
    return sorted(frozenset(s) for s in comps.values())


def test_empty_mask_no_components():
    raster = GeoRaster(np.zeros((8, 8), dtype=np.uint8), T)
    assert connected_components(raster).band(0).max() == 0


def test_diagonal_pixels_two_components():
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[1, 1] = mask[2, 2] = 1
    labels = connected_components(GeoRaster(mask, T)).band(0)
    assert labels[1, 1] != labels[2, 2] != 0


def test_only_four_connectivity_supported():
    with pytest.raises(ValueError):
        connected_components(GeoRaster(np.zeros((2, 2), dtype=np.uint8), T),
                             connectivity=8)


def test_components_match_flood_fill_oracle():
    rng = Rng(32)
    for trial in range(500):
        h, w = 4 + rng.bounded(61), 4 + rng.bounded(61)
        mask = _random_mask(rng, h, w)
        labels = connected_components(GeoRaster(mask, T)).band(0)
        oracle, count = oracle_flood_fill(mask)
        assert labels.max() == count, trial
        assert _partition_signature(labels) == _partition_signature(oracle), trial


def test_component_ids_dense_and_scan_ordered():
    rng = Rng(33)
    mask = _random_mask(rng, 40, 40)
    labels = connected_components(GeoRaster(mask, T)).band(0)
    ids = sorted(set(labels[labels > 0].tolist()))
    assert ids == list(range(1, len(ids) + 1))
    seen = []
    for r in range(40):
        for c in range(40):
            if labels[r, c] and labels[r, c] not in seen:
                seen.append(int(labels[r, c]))
    assert seen == ids  # first appearances in scan order


def test_strip_feeding_is_height_invariant():
    rng = Rng(34)
    mask = _random_mask(rng, 60, 45)
    results = []
    for strip in (1, 7, 60):
        scanner = ComponentScanner()
        for r0 in range(0, 60, strip):
            scanner.feed(mask[r0:r0 + strip], r0)
        results.append(scanner.finish())
    assert results[0] == results[1] == results[2]


# boundary tracing ------------------------------------------------------------

def test_single_pixel_square_ring():
    mask = np.zeros((5, 5), dtype=np.uint8)
    mask[2, 3] = 1
    labels = connected_components(GeoRaster(mask, T))
    exterior, interiors = trace_boundaries(labels, 1)
    assert interiors == []
    assert abs(polygon_net_area(exterior) - 0.25) < 1e-12
    perimeter = sum(math.dist(a, b) for a, b in zip(exterior, exterior[1:]))
    assert abs(perimeter - 2.0) < 1e-12  # four 0.5 m sides


def test_two_by_two_block():
    mask = np.zeros((5, 5), dtype=np.uint8)
    mask[1:3, 1:3] = 1
    labels = connected_components(GeoRaster(mask, T))
    exterior, _ = trace_boundaries(labels, 1)
    assert len(exterior) == 5  # square: 4 corners, closed
    assert abs(polygon_net_area(exterior) - 1.0) < 1e-12


def test_missing_component_id():
    labels = connected_components(GeoRaster(np.ones((2, 2), dtype=np.uint8), T))
    with pytest.raises(ValueError):
        trace_boundaries(labels, 9)


def test_traced_area_equals_pixel_count_exactly():
    rng = Rng(35)
    traced = 0
    for trial in range(60):
        mask = _random_mask(rng, 4 + rng.bounded(30), 4 + rng.bounded(30))
        raster = GeoRaster(mask, T)
        labels = connected_components(raster)
        for cid in range(1, int(labels.band(0).max()) + 1):
            exterior, interiors = trace_boundaries(labels, cid)
            pixels = int((labels.band(0) == cid).sum())
            assert polygon_net_area(exterior, interiors) == pixels * 0.25, trial
            traced += 1
    assert traced > 200


def test_traced_rings_rasterize_back_to_component():
    rng = Rng(36)
    for trial in range(40):
        mask = _random_mask(rng, 4 + rng.bounded(16), 4 + rng.bounded(16))
        labels = connected_components(GeoRaster(mask, T))
        arr = labels.band(0)
        for cid in range(1, int(arr.max()) + 1):
            exterior, interiors = trace_boundaries(labels, cid)
            rings_px = [[T.world_to_pixel(x, y)[::-1] for x, y in ring]
                        for ring in [exterior] + interiors]
            for r in range(mask.shape[0]):
                for c in range(mask.shape[1]):
                    inside = oracle_point_in_rings(c + 0.5, r + 0.5, rings_px)
                    assert inside == (arr[r, c] == cid), trial


# simplification ---------------------------------------------------------------

def test_square_unchanged():
    square = [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (0.0, 0.0)]
    assert sorted(simplify_ring(square, 0.5)[:-1]) == sorted(square[:-1])


def test_collinear_points_collapse():
    ring = [(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (4.0, 4.0), (2.0, 4.0),
            (0.0, 4.0), (0.0, 0.0)]
    out = simplify_ring(ring, 0.5)
    assert len(out) == 5
    assert (2.0, 0.0) not in out and (2.0, 4.0) not in out


def test_degenerate_ring_rejected():
    with pytest.raises(ValueError):
        simplify_ring([(0, 0), (1, 1), (0, 0)], 0.5)


def test_simplify_matches_recursive_reference():
    rng = Rng(37)
    for trial in range(1000):
        ring = random_rectilinear_ring(rng)
        ours = simplify_ring(ring, 0.5)
        reference = oracle_simplify_ring(ring, 0.5)
        assert ours == reference, trial


def test_simplify_hausdorff_bound():
    rng = Rng(38)
    for _ in range(200):
        ring = random_rectilinear_ring(rng)
        out = simplify_ring(ring, 0.5)
        for px, py in ring:
            d = min(point_segment_distance(px, py, a[0], a[1], b[0], b[1])
                    for a, b in zip(out, out[1:]))
            assert d <= 0.5 + 1e-9


def test_simplified_ring_closed():
    rng = Rng(39)
    for _ in range(100):
        out = simplify_ring(random_rectilinear_ring(rng), 0.5)
        assert out[0] == out[-1] and len(out) >= 3


# area filter -------------------------------------------------------------------

def _square_fp(side, fid="f"):
    ring = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side), (0.0, 0.0)]
    return Footprint(id=fid, exterior=ring)


def test_area_filter_boundaries():
    assert filter_area([_square_fp(5.0)], 30.0) == []
    kept = filter_area([_square_fp(6.0)], 30.0)
    assert len(kept) == 1


def test_area_filter_matches_shoelace_oracle(rng):
    footprints = []
    for i in range(200):
        side = 1.0 + rng.uniform() * 9.0
        footprints.append(_square_fp(side, f"f{i}"))
    kept = filter_area(footprints, 30.0)
    expect = [fp.id for fp in footprints
              if fp.exterior[1][0] ** 2 >= 30.0]
    assert [fp.id for fp in kept] == expect


def test_area_filter_uses_net_area():
    outer = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.0)]
    hole = [(1.0, 1.0), (1.0, 9.5), (9.5, 9.5), (9.5, 1.0), (1.0, 1.0)]
    fp = Footprint(id="ring", exterior=outer, interiors=[hole])
    assert fp.net_area() < 30.0
    assert filter_area([fp], 30.0) == []


# full polygonize -----------------------------------------------------------------

def test_polygonize_all_zero():
    pred = GeoRaster(np.zeros((64, 64), dtype=np.float32), T, "f32")
    assert len(polygonize(pred)) == 0


def test_polygonize_solid_square_exact_area():
    # 20x20 px solid at 0.5 m/px; edge replication keeps the borders intact
    arr = np.ones((20, 20), dtype=np.float32)
    fps = polygonize(GeoRaster(arr, T, "f32"))
    assert len(fps) == 1
    fp = fps.footprints[0]
    assert fp.area_m2 == 100.0
    assert fp.pixel_count == 400


def test_polygonize_interior_square_erodes_corners_only():
    arr = np.zeros((64, 64), dtype=np.float32)
    arr[10:30, 20:40] = 1.0
    fps = polygonize(GeoRaster(arr, T, "f32"), dp_tolerance=1e-9)
    assert len(fps) == 1
    # the 7x7 majority eats 5 pixels at each convex corner
    assert fps.footprints[0].pixel_count == 400 - 4 * 5
    assert fps.footprints[0].area_m2 == (400 - 20) * 0.25


def test_polygonize_class_raster_accepted():
    arr = np.zeros((40, 40), dtype=np.uint8)
    arr[5:25, 5:25] = 1
    fps = polygonize(GeoRaster(arr, T, "u8"))
    assert len(fps) == 1


def test_polygonize_tiling_invariance_random_scenes():
    rng = Rng(40)
    for trial in range(20):
        h, w = 96 + rng.bounded(160), 96 + rng.bounded(160)
        arr = (rng.bulk_uniform(h * w).reshape(h, w) < 0.55).astype(np.float32)
        raster = GeoRaster(arr, T, "f32")
        results = [write_footprints(polygonize(raster, tile_size=ts,
                                               min_area=2.0))
                   for ts in (256, 1024, h)]
        assert results[0] == results[1] == results[2], trial


def test_polygonize_footprint_ids_sequential():
    arr = np.zeros((64, 64), dtype=np.float32)
    arr[4:20, 4:20] = 1.0
    arr[30:50, 30:50] = 1.0
    fps = polygonize(GeoRaster(arr, T, "f32"))
    assert [fp.id for fp in fps] == ["b00001", "b00002"]
