"""Building-quality classification from footprint morphology.

Six features per building: area, min-bounding-rectangle ratio, neighbor count
within 200 m (centroid rule), nearest-building distance, max terrain slope
(Horn 3x3 over a DEM), and corner count of the simplified outline. A small
gradient-boosted tree ensemble on logistic loss separates "regular" from
"low_quality"; repeated stratified splits give the reported F1 spread.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .footprints import simplify_ring
from .geojson_io import Footprint, FootprintSet
from .geometry import (bounding_box, convex_hull, ring_centroid,
                       segment_segment_distance)
from .grid import GeoRaster
from .labels import rasterize_polygons
from .rng import Rng, derive_seed

ISOLATED_SENTINEL_M = 1e6
FEATURE_NAMES = ("area_m2", "mbr_ratio", "neighbors_200m", "nearest_dist_m",
                 "max_slope_deg", "corner_count")
LABELS = ("regular", "low_quality")  # low_quality is the positive class


def min_area_rect(polygon):
    """Minimum-area enclosing rectangle via rotating calipers on the hull.

    One rectangle side is collinear with a hull edge. Returns (corners, area)
    with corners as 4 (x, y) tuples.
    """
    pts = polygon[:-1] if polygon and polygon[0] == polygon[-1] else list(polygon)
    hull = convex_hull([tuple(p) for p in pts])
    if len(hull) < 3:
        raise ValueError("polygon needs at least 3 distinct, non-collinear vertices")
    # local frame keeps the rotated projections small regardless of world offset
    ox, oy = hull[0]
    hx = np.array([p[0] - ox for p in hull])
    hy = np.array([p[1] - oy for p in hull])
    best = None
    for i in range(len(hull)):
        ex = hx[(i + 1) % len(hull)] - hx[i]
        ey = hy[(i + 1) % len(hull)] - hy[i]
        norm = math.hypot(ex, ey)
        if norm == 0.0:
            continue
        ux, uy = ex / norm, ey / norm
        # rotate hull into the edge frame
        rx = hx * ux + hy * uy
        ry = -hx * uy + hy * ux
        x0, x1 = float(rx.min()), float(rx.max())
        y0, y1 = float(ry.min()), float(ry.max())
        area = (x1 - x0) * (y1 - y0)
        if best is None or area < best[0]:
            best = (area, ux, uy, x0, x1, y0, y1)
    area, ux, uy, x0, x1, y0, y1 = best
    corners = [(ox + x * ux - y * uy, oy + x * uy + y * ux)
               for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
    return corners, area


@dataclass
class BuildingFeatureVector:
    id: str
    area_m2: float
    mbr_ratio: float
    neighbors_200m: int
    nearest_dist_m: float
    max_slope_deg: float
    corner_count: int
    dem_missing: bool = False

    def values(self):
        return (self.area_m2, self.mbr_ratio, float(self.neighbors_200m),
                self.nearest_dist_m, self.max_slope_deg, float(self.corner_count))


def horn_slope_degrees(dem: GeoRaster) -> np.ndarray:
    """Per-pixel maximum slope (degrees) by Horn's 3x3 method, edges replicated."""
    z = np.pad(dem.band(0).astype(np.float64), 1, mode="edge")
    cell = dem.transform.pixel_size
    a, b, c = z[:-2, :-2], z[:-2, 1:-1], z[:-2, 2:]
    d, f = z[1:-1, :-2], z[1:-1, 2:]
    g, h, i = z[2:, :-2], z[2:, 1:-1], z[2:, 2:]
    dzdx = ((c + 2 * f + i) - (a + 2 * d + g)) / (8 * cell)
    dzdy = ((g + 2 * h + i) - (a + 2 * b + c)) / (8 * cell)
    return np.degrees(np.arctan(np.hypot(dzdx, dzdy)))


def _ring_distance(ring_a, ring_b) -> float:
    best = math.inf
    for ea in zip(ring_a[:-1], ring_a[1:]):
        for eb in zip(ring_b[:-1], ring_b[1:]):
            d = segment_segment_distance(ea[0], ea[1], eb[0], eb[1])
            if d < best:
                best = d
                if best == 0.0:
                    return 0.0
    return best


def _bbox_gap(a, b) -> float:
    dx = max(0.0, max(a[0] - b[2], b[0] - a[2]))
    dy = max(0.0, max(a[1] - b[3], b[1] - a[3]))
    return math.hypot(dx, dy)


def extract_features(footprint: Footprint, all_footprints: FootprintSet,
                     dem: GeoRaster | None = None,
                     slope_raster: np.ndarray | None = None,
                     neighbor_radius: float = 200.0) -> BuildingFeatureVector:
    """Feature vector for one footprint of the set."""
    others = [fp for fp in all_footprints if fp.id != footprint.id]
    if len(others) == len(all_footprints.footprints):
        raise ValueError(f"footprint {footprint.id!r} is not in the set")
    area = footprint.net_area()
    _, rect_area = min_area_rect(footprint.exterior)
    cx, cy = ring_centroid(footprint.exterior)
    neighbors = 0
    for other in others:
        ox, oy = ring_centroid(other.exterior)
        if math.hypot(ox - cx, oy - cy) <= neighbor_radius:
            neighbors += 1
    nearest = ISOLATED_SENTINEL_M
    narrow = sorted(others, key=lambda o: _bbox_gap(bounding_box(footprint.exterior),
                                                    bounding_box(o.exterior)))
    for other in narrow:
        gap = _bbox_gap(bounding_box(footprint.exterior), bounding_box(other.exterior))
        if gap >= nearest:
            break
        nearest = min(nearest, _ring_distance(footprint.exterior, other.exterior))
        if nearest == 0.0:
            break
    max_slope = 0.0
    dem_missing = dem is None
    if dem is not None:
        slope = horn_slope_degrees(dem) if slope_raster is None else slope_raster
        covered = rasterize_polygons([(footprint.exterior, footprint.interiors)],
                                     dem.transform, dem.width, dem.height).astype(bool)
        if covered.any():
            max_slope = float(slope[covered].max())
        else:  # footprint smaller than a DEM pixel: sample at the centroid
            r, c = dem.transform.world_to_pixel(cx, cy)
            r = min(max(int(r), 0), dem.height - 1)
            c = min(max(int(c), 0), dem.width - 1)
            max_slope = float(slope[r, c])
    simplified = simplify_ring(footprint.exterior, 0.5)
    return BuildingFeatureVector(
        id=footprint.id, area_m2=area, mbr_ratio=rect_area / area,
        neighbors_200m=neighbors, nearest_dist_m=nearest,
        max_slope_deg=max_slope, corner_count=len(simplified) - 1,
        dem_missing=dem_missing)


def extract_all_features(footprints: FootprintSet, dem: GeoRaster | None = None):
    slope = horn_slope_degrees(dem) if dem is not None else None
    return [extract_features(fp, footprints, dem, slope) for fp in footprints]


@dataclass
class QualityDataset:
    features: list  # of BuildingFeatureVector
    labels: list  # "regular" | "low_quality", parallel to features

    def matrix(self):
        x = np.array([fv.values() for fv in self.features], dtype=np.float64)
        y = np.array([1 if l == "low_quality" else 0 for l in self.labels],
                     dtype=np.float64)
        return x, y

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(("id",) + FEATURE_NAMES + ("dem_missing", "label"))
        for fv, label in zip(self.features, self.labels):
            writer.writerow([fv.id, fv.area_m2, fv.mbr_ratio, fv.neighbors_200m,
                             fv.nearest_dist_m, fv.max_slope_deg, fv.corner_count,
                             int(fv.dem_missing), label])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "QualityDataset":
        rows = list(csv.reader(io.StringIO(text)))
        features, labels = [], []
        for row in rows[1:]:
            if not row:
                continue
            features.append(BuildingFeatureVector(
                id=row[0], area_m2=float(row[1]), mbr_ratio=float(row[2]),
                neighbors_200m=int(float(row[3])), nearest_dist_m=float(row[4]),
                max_slope_deg=float(row[5]), corner_count=int(float(row[6])),
                dem_missing=bool(int(row[7]))))
            labels.append(row[8])
        return cls(features, labels)


@dataclass
class GBDTConfig:
    tree_count: int = 200
    learning_rate: float = 0.1
    max_depth: int = 3
    seed: int = 0


class _RegressionTree:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            node = 0
            while self.feature[node] >= 0:
                node = (self.left[node] if x[i, self.feature[node]]
                        < self.threshold[node] else self.right[node])
            out[i] = self.value[node]
        return out


def _best_regression_split(x: np.ndarray, g: np.ndarray):
    """(gain, feature, threshold) maximizing squared-error reduction on g."""
    n = len(g)
    base = g.sum() ** 2 / n
    best = None
    for f in range(x.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        gs = g[order].cumsum()
        cut = np.flatnonzero(xs[:-1] != xs[1:])  # last index of each left block
        if cut.size == 0:
            continue
        nl = cut + 1
        nr = n - nl
        gain = gs[cut] ** 2 / nl + (gs[-1] - gs[cut]) ** 2 / nr - base
        at = int(np.argmax(gain))
        if best is None or gain[at] > best[0] + 1e-15:
            best = (float(gain[at]), f, (xs[cut[at]] + xs[cut[at] + 1]) / 2.0)
    return best


def _grow_regression(tree: _RegressionTree, x, g, h, idx, depth, max_depth,
                     gains: np.ndarray) -> int:
    if depth >= max_depth or idx.size < 2:
        return _newton_leaf(tree, g, h, idx)
    best = _best_regression_split(x[idx], g[idx])
    if best is None or best[0] <= 1e-12:
        return _newton_leaf(tree, g, h, idx)
    gain, f, threshold = best
    gains[f] += gain
    node = len(tree.feature)
    tree.feature.append(f)
    tree.threshold.append(threshold)
    tree.left.append(-1)
    tree.right.append(-1)
    tree.value.append(0.0)
    go_left = x[idx, f] < threshold
    tree.left[node] = _grow_regression(tree, x, g, h, idx[go_left], depth + 1,
                                       max_depth, gains)
    tree.right[node] = _grow_regression(tree, x, g, h, idx[~go_left], depth + 1,
                                        max_depth, gains)
    return node


def _newton_leaf(tree: _RegressionTree, g, h, idx) -> int:
    tree.feature.append(-1)
    tree.threshold.append(0.0)
    tree.left.append(-1)
    tree.right.append(-1)
    tree.value.append(float(g[idx].sum() / (h[idx].sum() + 1e-16)))
    return len(tree.feature) - 1


@dataclass
class GBDTModel:
    initial: float
    trees: list
    config: GBDTConfig
    importances: dict = field(default_factory=dict)  # feature name -> percent
    train_logloss: list = field(default_factory=list)

    def decision_scores(self, x: np.ndarray) -> np.ndarray:
        scores = np.full(x.shape[0], self.initial)
        for tree in self.trees:
            scores += self.config.learning_rate * tree.predict(x)
        return scores

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision_scores(x)))


def train_gbdt(dataset: QualityDataset, config: GBDTConfig | None = None) -> GBDTModel:
    config = config or GBDTConfig()
    x, y = dataset.matrix()
    if len(y) < 10:
        raise ValueError("need at least 10 rows to train")
    pos = float(y.sum())
    if pos == 0 or pos == len(y):
        raise ValueError("training data must contain both quality classes")
    initial = math.log(pos / (len(y) - pos))
    scores = np.full(len(y), initial)
    gains = np.zeros(len(FEATURE_NAMES))
    trees, losses = [], []
    for _ in range(config.tree_count):
        p = 1.0 / (1.0 + np.exp(-scores))
        g = y - p  # negative gradient of the logistic loss
        h = p * (1.0 - p)
        tree = _RegressionTree()
        _grow_regression(tree, x, g, h, np.arange(len(y)), 0, config.max_depth, gains)
        trees.append(tree)
        scores = scores + config.learning_rate * tree.predict(x)
        p = np.clip(1.0 / (1.0 + np.exp(-scores)), 1e-12, 1 - 1e-12)
        losses.append(float(-(y * np.log(p) + (1 - y) * np.log(1 - p)).mean()))
    total = gains.sum()
    shares = gains / total * 100.0 if total > 0 else gains
    importances = {name: float(s) for name, s in zip(FEATURE_NAMES, shares)}
    return GBDTModel(initial=initial, trees=trees, config=config,
                     importances=importances, train_logloss=losses)


def gbdt_to_json(model: GBDTModel) -> str:
    return json.dumps({
        "model": "quality_gbdt", "version": 1, "initial": model.initial,
        "config": {"tree_count": model.config.tree_count,
                   "learning_rate": model.config.learning_rate,
                   "max_depth": model.config.max_depth, "seed": model.config.seed},
        "importances": model.importances,
        "trees": [{"feature": t.feature, "threshold": t.threshold,
                   "left": t.left, "right": t.right, "value": t.value}
                  for t in model.trees],
    })


def gbdt_from_json(text: str) -> GBDTModel:
    doc = json.loads(text)
    if doc.get("model") != "quality_gbdt":
        raise ValueError("not a quality GBDT model document")
    trees = []
    for td in doc["trees"]:
        tree = _RegressionTree()
        tree.feature = td["feature"]
        tree.threshold = td["threshold"]
        tree.left = td["left"]
        tree.right = td["right"]
        tree.value = td["value"]
        trees.append(tree)
    return GBDTModel(initial=doc["initial"], trees=trees,
                     config=GBDTConfig(**doc["config"]),
                     importances=doc.get("importances", {}))


def _f1_for_class(y_true: np.ndarray, y_pred: np.ndarray, positive: int) -> float:
    tp = int(((y_pred == positive) & (y_true == positive)).sum())
    fp = int(((y_pred == positive) & (y_true != positive)).sum())
    fn = int(((y_pred != positive) & (y_true == positive)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def evaluate_repeated_splits(dataset: QualityDataset, repeats: int = 50,
                             test_fraction: float = 0.25, seed: int = 0,
                             config: GBDTConfig | None = None):
    """Stratified random splits; returns per-class F1 (mean, sample std)."""
    x, y = dataset.matrix()
    class_idx = {c: np.flatnonzero(y == c) for c in (0, 1)}
    if any(v.size < 2 for v in class_idx.values()):
        raise ValueError("each class needs at least 2 rows for stratified splits")
    scores = {label: [] for label in LABELS}
    for r in range(repeats):
        rng = Rng(derive_seed(seed, r))
        test_sel = []
        for c in (0, 1):
            order = [int(i) for i in class_idx[c]]
            rng.shuffle(order)
            n_test = max(1, int(round(len(order) * test_fraction)))
            n_test = min(n_test, len(order) - 1)  # keep at least one for training
            test_sel.extend(order[:n_test])
        test_mask = np.zeros(len(y), dtype=bool)
        test_mask[test_sel] = True
        subset = QualityDataset(
            [fv for fv, m in zip(dataset.features, test_mask) if not m],
            [lb for lb, m in zip(dataset.labels, test_mask) if not m])
        model = train_gbdt(subset, config)
        pred = (model.predict_proba(x[test_mask]) >= 0.5).astype(int)
        truth = y[test_mask].astype(int)
        scores["regular"].append(_f1_for_class(truth, pred, 0))
        scores["low_quality"].append(_f1_for_class(truth, pred, 1))
    out = {}
    for label, vals in scores.items():
        arr = np.asarray(vals)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out[label] = (float(arr.mean()), std)
    return out


def classify_footprints(model: GBDTModel, footprints: FootprintSet,
                        dem: GeoRaster | None = None) -> FootprintSet:
    """Attach a quality label to every footprint; geometry untouched."""
    vectors = extract_all_features(footprints, dem)
    x = np.array([fv.values() for fv in vectors], dtype=np.float64)
    if len(footprints.footprints) == 0:
        return FootprintSet([], crs_tag=footprints.crs_tag)
    probs = model.predict_proba(x)
    out = []
    for fp, p in zip(footprints, probs):
        out.append(Footprint(id=fp.id, exterior=fp.exterior, interiors=fp.interiors,
                             area_m2=fp.area_m2,
                             quality="low_quality" if p >= 0.5 else "regular"))
    return FootprintSet(out, crs_tag=footprints.crs_tag)
