"""Per-pixel RGB random forest: the local color-based baseline model.

Binary problem: building vs everything else (road and background merge).
Trees are grown on bootstrap samples with Gini splits over exhaustive u8
thresholds, two of the three channels drawn per split. Everything is
deterministic under the configured seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .grid import GeoRaster, GridWriter
from .labels import BUILDING, UNKNOWN, SparseLabelMask
from .rng import Rng, derive_seed


class TrainingError(ValueError):
    """Training data cannot produce a model (e.g. single class)."""


@dataclass
class ForestConfig:
    tree_count: int = 50
    max_depth: int = 12
    min_leaf_size: int = 4
    seed: int = 0


class Tree:
    """Flat node arrays; node 0 is the root. feature == -1 marks a leaf."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.prob: list[float] = []

    def add_leaf(self, prob: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.prob.append(prob)
        return len(self.feature) - 1

    def add_split(self, feature: int, threshold: float) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.prob.append(0.0)
        return len(self.feature) - 1

    def max_path_length(self) -> int:
        def depth(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(depth(self.left[i]), depth(self.right[i]))
        return depth(0)


@dataclass
class RandomForestModel:
    trees: list
    config: ForestConfig

    def predict_colors(self, colors: np.ndarray) -> np.ndarray:
        """Mean leaf probability over trees for an (n, 3) u8 feature block."""
        n = colors.shape[0]
        acc = np.zeros(n, dtype=np.float64)
        cf = colors.astype(np.float64)
        for tree in self.trees:
            feature = np.asarray(tree.feature)
            threshold = np.asarray(tree.threshold)
            left = np.asarray(tree.left)
            right = np.asarray(tree.right)
            prob = np.asarray(tree.prob)
            node = np.zeros(n, dtype=np.int64)
            active = feature[node] >= 0
            while active.any():
                idx = np.flatnonzero(active)
                cur = node[idx]
                go_left = cf[idx, feature[cur]] < threshold[cur]
                node[idx] = np.where(go_left, left[cur], right[cur])
                active[idx] = feature[node[idx]] >= 0
            acc += prob[node]
        return (acc / len(self.trees)).astype(np.float32)


def _best_split(values: np.ndarray, positives: np.ndarray, n: int, pos_total: float,
                min_leaf: int):
    """Best Gini split of one u8 feature column; None when no valid threshold."""
    counts = np.bincount(values, minlength=256)
    pos = np.bincount(values, weights=positives, minlength=256)
    n_left = counts.cumsum()
    p_left = pos.cumsum()
    # candidate thresholds sit after each occupied value except the last
    occupied = counts > 0
    candidates = occupied.copy()
    candidates[n_left == n] = False
    n_right = n - n_left
    valid = candidates & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    with np.errstate(invalid="ignore", divide="ignore"):
        p_right = pos_total - p_left
        gini_l = 1.0 - (p_left / n_left) ** 2 - ((n_left - p_left) / n_left) ** 2
        gini_r = 1.0 - (p_right / n_right) ** 2 - ((n_right - p_right) / n_right) ** 2
        score = np.where(valid, n_left * gini_l + n_right * gini_r, np.inf)
    at = int(np.argmin(score))
    upper = int(np.flatnonzero(occupied[at + 1:])[0]) + at + 1
    return float(score[at]), (at + upper) / 2.0


def _grow(tree: Tree, x: np.ndarray, y: np.ndarray, idx: np.ndarray, depth: int,
          cfg: ForestConfig, rng: Rng) -> int:
    n = idx.size
    pos = float(y[idx].sum())
    if depth >= cfg.max_depth or pos == 0 or pos == n or n < 2 * cfg.min_leaf_size:
        return tree.add_leaf(pos / n)
    order = rng.sample_indices(x.shape[1], x.shape[1])
    best = None
    for rank, f in enumerate(order):
        # the third channel is a fallback, only consulted when the sampled
        # two admit no valid split
        if rank == 2 and best is not None:
            break
        found = _best_split(x[idx, f], y[idx].astype(np.float64), n, pos,
                            cfg.min_leaf_size)
        if found is not None and (best is None or found[0] < best[0]):
            best = (found[0], f, found[1])
    if best is None:
        return tree.add_leaf(pos / n)
    _, f, threshold = best
    node = tree.add_split(f, threshold)
    go_left = x[idx, f] < threshold
    tree.left[node] = _grow(tree, x, y, idx[go_left], depth + 1, cfg, rng)
    tree.right[node] = _grow(tree, x, y, idx[~go_left], depth + 1, cfg, rng)
    return node


def train_random_forest(imagery: GeoRaster, mask: SparseLabelMask,
                        config: ForestConfig | None = None) -> RandomForestModel:
    if imagery.bands != 3:
        raise ValueError("imagery must have 3 bands")
    config = config or ForestConfig()
    labeled = mask.labels != UNKNOWN
    y = (mask.labels[labeled] == BUILDING)
    x = np.stack([imagery.band(b)[labeled] for b in range(3)], axis=1)
    if not y.any() or y.all():
        raise TrainingError("training mask must contain building and non-building pixels")
    trees = []
    n = x.shape[0]
    for t in range(config.tree_count):
        rng = Rng(derive_seed(config.seed, t))
        bootstrap = rng.bulk_bounded(n, n)
        tree = Tree()
        _grow(tree, x, y, np.asarray(bootstrap), 0, config, rng)
        trees.append(tree)
    return RandomForestModel(trees=trees, config=config)


def predict_proba(model: RandomForestModel, imagery, tile_size: int = 1024,
                  writer: GridWriter | None = None) -> GeoRaster | None:
    """Building probability per pixel; tiled execution is bit-exact.

    Each pixel's probability is a pure function of its color, evaluated once
    per distinct color in a strip. With `writer` the output streams to disk
    and nothing scene-sized is held; otherwise an f32 raster is returned.
    """
    if imagery.bands != 3:
        raise ValueError("imagery must have 3 bands")
    height, width = imagery.height, imagery.width
    out = None if writer is not None else np.empty((height, width), dtype=np.float32)
    tile_size = max(1, min(tile_size, height))
    for r0 in range(0, height, tile_size):
        nrows = min(tile_size, height - r0)
        rgb = np.stack([imagery.read_window(r0, 0, nrows, width, band=b)
                        for b in range(3)], axis=-1)
        packed = (rgb[..., 0].astype(np.uint32) << 16) \
            | (rgb[..., 1].astype(np.uint32) << 8) | rgb[..., 2]
        colors, inverse = np.unique(packed.ravel(), return_inverse=True)
        table = np.stack([(colors >> 16) & 255, (colors >> 8) & 255, colors & 255],
                         axis=1).astype(np.uint8)
        probs = model.predict_colors(table)
        strip = probs[inverse].reshape(nrows, width)
        if writer is not None:
            writer.write_rows(r0, strip)
        else:
            out[r0:r0 + nrows] = strip
    if writer is not None:
        return None
    return GeoRaster(out, imagery.transform, "f32", nodata=None,
                     crs_tag=imagery.crs_tag)


def model_to_json(model: RandomForestModel) -> str:
    trees = [{"feature": t.feature,
              "threshold": [th if f >= 0 else None
                            for f, th in zip(t.feature, t.threshold)],
              "left": t.left, "right": t.right,
              "prob": [p if f < 0 else None for f, p in zip(t.feature, t.prob)]}
             for t in model.trees]
    return json.dumps({"model": "random_forest_rgb", "version": 1,
                       "config": asdict(model.config), "trees": trees})


def model_from_json(text: str) -> RandomForestModel:
    doc = json.loads(text)
    if doc.get("model") != "random_forest_rgb":
        raise ValueError("not a random forest model document")
    trees = []
    for td in doc["trees"]:
        tree = Tree()
        tree.feature = [int(f) for f in td["feature"]]
        tree.threshold = [0.0 if t is None else float(t) for t in td["threshold"]]
        tree.left = [int(v) for v in td["left"]]
        tree.right = [int(v) for v in td["right"]]
        tree.prob = [0.0 if p is None else float(p) for p in td["prob"]]
        trees.append(tree)
    return RandomForestModel(trees=trees, config=ForestConfig(**doc["config"]))
