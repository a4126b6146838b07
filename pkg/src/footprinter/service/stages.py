"""Pipeline stage execution behind the service endpoints.

Each stage reads and writes files named in the request, returns a response
model, and logs one machine-parsable line with wall time and peak memory.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
import tracemalloc
from contextlib import contextmanager

import numpy as np

from .. import change as change_mod
from .. import quality as quality_mod
from ..config import PipelineConfig
from ..evaluation import (CountAdjustment, CountWindow, EvalReport,
                          count_in_windows, fit_count_adjustment, pixel_prf,
                          r2_score, recall_at_k)
from ..footprints import binarize_block, polygonize
from ..forest import (ForestConfig, model_from_json, model_to_json,
                      predict_proba, train_random_forest)
from ..geojson_io import (Annotation, FootprintSet, annotations_wgs84_to_tm,
                          parse_annotations, parse_footprints,
                          write_annotations, write_footprints)
from ..geometry import bounding_box, polygons_intersect
from ..grid import GeoRaster, GridSource, GridWriter, write_grid
from ..labels import (SparseLabelMask, buffer_buildings, merge_roads,
                      rasterize_annotations, rasterize_polygons,
                      subsample_annotations)
from ..rng import derive_seed
from ..synth import SynthSpec, generate_synthetic_scene
from . import schemas

log = logging.getLogger("footprinter.stages")


class StageError(ValueError):
    """User-correctable problem: missing input, malformed file, bad params."""


@contextmanager
def stage_timer(name: str):
    holder = {}
    started_here = not tracemalloc.is_tracing()
    if started_here:
        tracemalloc.start()
    else:
        tracemalloc.reset_peak()
    t0 = time.perf_counter()
    try:
        yield holder
    finally:
        wall = time.perf_counter() - t0
        _, peak = tracemalloc.get_traced_memory()
        if started_here:
            tracemalloc.stop()
        stats = schemas.StageStats(stage=name, wall_s=round(wall, 4),
                                   peak_mb=round(peak / 1e6, 3))
        holder["stats"] = stats
        log.info(json.dumps({"stage": name, "wall_s": stats.wall_s,
                             "peak_mb": stats.peak_mb}))


def _read_text(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise StageError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _open_grid(path: str) -> GridSource:
    try:
        return GridSource(path)
    except OSError as exc:
        raise StageError(str(exc)) from exc


def _load_annotations(path: str):
    return parse_annotations(_read_text(path))


def _load_footprints(path: str) -> FootprintSet:
    return parse_footprints(_read_text(path))


def _windows_to_geojson(windows) -> str:
    features = []
    for w in windows:
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon",
                         "coordinates": [[list(p) for p in w.ring()]]},
            "properties": {"actual_count": w.actual_count},
        })
    return json.dumps({"type": "FeatureCollection", "features": features})


def _windows_from_geojson(text: str):
    doc = json.loads(text)
    windows = []
    for feature in doc.get("features", []):
        ring = feature["geometry"]["coordinates"][0]
        x0, y0, x1, _ = bounding_box([tuple(p) for p in ring])
        windows.append(CountWindow(x0, y0, x1 - x0,
                                   int(feature.get("properties", {})
                                       .get("actual_count", 0))))
    return windows


def _region_from_geojson(text: str):
    doc = json.loads(text)
    ring = doc["features"][0]["geometry"]["coordinates"][0]
    return [tuple(p) for p in ring]


def run_synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    with stage_timer("synth") as held:
        spec = SynthSpec(width_px=req.width_px, height_px=req.height_px,
                         pixel_size=req.pixel_size,
                         building_count=req.building_count,
                         train_count=req.train_count, color_mode=req.color_mode,
                         noise_sigma=req.noise_sigma, seed=req.seed)
        scene = generate_synthetic_scene(spec)
        out = req.out_dir
        os.makedirs(out, exist_ok=True)
        paths = {name: os.path.join(out, name) for name in (
            "imagery.grid", "dem.grid", "truth.geojson", "annotations.geojson",
            "test.geojson", "val_buildings.geojson", "val_region.geojson",
            "windows.geojson")}
        write_grid(scene.imagery, paths["imagery.grid"])
        write_grid(scene.dem, paths["dem.grid"])
        _write_text(paths["truth.geojson"], write_footprints(scene.truth))
        _write_text(paths["annotations.geojson"], write_annotations(scene.annotations))
        test_ids = set(scene.test_ids)
        test_ann = [Annotation(exterior=fp.exterior, category="building",
                               confidence="high", id=fp.id)
                    for fp in scene.truth if fp.id in test_ids]
        _write_text(paths["test.geojson"], write_annotations(test_ann))
        val_ann = [Annotation(exterior=fp.exterior, category="building",
                              confidence="high", id=fp.id)
                   for fp in scene.truth
                   if polygons_intersect(fp.exterior, fp.interiors,
                                         scene.val_region, [])]
        _write_text(paths["val_buildings.geojson"], write_annotations(val_ann))
        _write_text(paths["val_region.geojson"], json.dumps({
            "type": "FeatureCollection",
            "features": [{"type": "Feature",
                          "geometry": {"type": "Polygon",
                                       "coordinates": [[list(p) for p in
                                                        scene.val_region]]},
                          "properties": {}}]}))
        _write_text(paths["windows.geojson"], _windows_to_geojson(scene.windows))
    return schemas.SynthResponse(
        imagery=paths["imagery.grid"], dem=paths["dem.grid"],
        truth=paths["truth.geojson"], annotations=paths["annotations.geojson"],
        test_buildings=paths["test.geojson"],
        val_buildings=paths["val_buildings.geojson"],
        val_region=paths["val_region.geojson"], windows=paths["windows.geojson"],
        building_count=len(scene.truth), train_count=len(scene.train_ids),
        test_count=len(scene.test_ids), stats=held["stats"])


def _build_mask(annotations, reference, buffer_radius_m, apply_buffer,
                do_merge_roads):
    mask, warnings = rasterize_annotations(annotations, reference.transform,
                                           reference.width, reference.height)
    if apply_buffer:
        mask = buffer_buildings(mask, buffer_radius_m)
    if do_merge_roads:
        mask = merge_roads(mask)
    return mask, warnings


def run_rasterize_labels(req: schemas.RasterizeLabelsRequest) -> schemas.RasterizeLabelsResponse:
    with stage_timer("rasterize-labels") as held:
        annotations, warnings = _load_annotations(req.annotations)
        if req.labels_crs == "wgs84":
            if req.central_meridian is None:
                raise StageError("central_meridian required for wgs84 labels")
            annotations = annotations_wgs84_to_tm(annotations, req.central_meridian)
        elif req.labels_crs != "scene":
            raise StageError(f"unknown labels_crs {req.labels_crs!r}")
        reference = _open_grid(req.reference)
        mask, rast_warnings = _build_mask(annotations, reference,
                                          req.buffer_radius_m, req.apply_buffer,
                                          req.merge_roads)
        write_grid(mask.to_raster(), req.out_mask)
        labels = mask.labels
    return schemas.RasterizeLabelsResponse(
        mask=req.out_mask,
        labeled_pixels=int((labels != 255).sum()),
        building_pixels=int((labels == 1).sum()),
        background_pixels=int((labels == 0).sum()),
        road_pixels=int((labels == 2).sum()),
        warnings=warnings + rast_warnings, stats=held["stats"])


def run_train_rf(req: schemas.TrainForestRequest) -> schemas.TrainForestResponse:
    with stage_timer("train-rf") as held:
        imagery = _open_grid(req.imagery).read_all()
        mask_raster = _open_grid(req.mask).read_all()
        mask = SparseLabelMask.from_raster(mask_raster)
        config = ForestConfig(tree_count=req.trees, max_depth=req.max_depth,
                              min_leaf_size=req.min_leaf_size, seed=req.seed)
        model = train_random_forest(imagery, mask, config)
        _write_text(req.out_model, model_to_json(model))
        n_labeled = int((mask.labels != 255).sum())
    return schemas.TrainForestResponse(model=req.out_model,
                                       training_pixels=n_labeled,
                                       stats=held["stats"])


def run_predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
    with stage_timer("predict") as held:
        source = _open_grid(req.imagery)
        model = model_from_json(_read_text(req.model))
        writer = GridWriter(req.out_prediction, source.width, source.height, 1,
                            "f32", source.transform, nodata=None,
                            crs_tag=source.crs_tag)
        predict_proba(model, source, tile_size=req.tile_size, writer=writer)
        writer.close()
    return schemas.PredictResponse(prediction=req.out_prediction,
                                   stats=held["stats"])


def run_polygonize(req: schemas.PolygonizeRequest) -> schemas.PolygonizeResponse:
    with stage_timer("polygonize") as held:
        source = _open_grid(req.prediction)
        footprints = polygonize(source, threshold=req.threshold,
                                tile_size=req.tile_size,
                                dp_tolerance=req.dp_tolerance_m,
                                min_area=req.min_area_m2,
                                median_kernel=req.median_kernel)
        _write_text(req.out_footprints, write_footprints(footprints))
    return schemas.PolygonizeResponse(footprints=req.out_footprints,
                                      footprint_count=len(footprints),
                                      stats=held["stats"])


def _footprint_mask(footprints: FootprintSet, reference) -> GeoRaster:
    data = rasterize_polygons([(fp.exterior, fp.interiors) for fp in footprints],
                              reference.transform, reference.width,
                              reference.height)
    return GeoRaster(data, reference.transform, "u8")


def run_eval(req: schemas.EvalRequest) -> schemas.EvalResponse:
    with stage_timer("eval") as held:
        footprints = _load_footprints(req.footprints)
        report = EvalReport()
        warnings: list[str] = []
        prediction = _open_grid(req.prediction) if req.prediction else None
        if req.val_buildings and req.val_region:
            if prediction is None:
                raise StageError("pixel metrics need a prediction raster")
            raster = prediction.read_all()
            binary = GeoRaster(binarize_block(raster.band(0), raster.sample_type,
                                              raster.nodata, req.threshold),
                               raster.transform, "u8")
            val_anns, _ = _load_annotations(req.val_buildings)
            region = _region_from_geojson(_read_text(req.val_region))
            scores = pixel_prf(binary, [a.exterior for a in val_anns], region)
            report.precision = scores.precision
            report.recall = scores.recall
            report.f1 = scores.f1
            report.precision_degenerate = scores.precision_degenerate
        if req.test_buildings:
            if prediction is None:
                raise StageError("recall@k needs a prediction raster for its grid")
            test_anns, _ = _load_annotations(req.test_buildings)
            mask = _footprint_mask(footprints, prediction)
            for k in req.k_values:
                rec, warns = recall_at_k(mask, [a.exterior for a in test_anns], k)
                report.recall_at_k[k] = rec
                warnings.extend(warns)
        if req.windows:
            windows = _windows_from_geojson(_read_text(req.windows))
            predicted = count_in_windows(footprints, windows)
            actual = [w.actual_count for w in windows]
            report.window_actual = actual
            report.window_predicted = predicted
            report.r2 = r2_score(actual, predicted)
            report.adjustment = fit_count_adjustment(predicted, actual)
        _write_text(req.out_report, json.dumps(report.to_dict(), indent=2) + "\n")
        adj = report.adjustment
    return schemas.EvalResponse(
        report=req.out_report, precision=report.precision, recall=report.recall,
        f1=report.f1,
        recall_at_k={f"{k:g}": v for k, v in report.recall_at_k.items()},
        r2=report.r2,
        adjustment_slope=None if adj is None else adj.slope,
        adjustment_intercept=None if adj is None else adj.intercept,
        adjustment_rmse=None if adj is None else adj.rmse,
        warnings=warnings, stats=held["stats"])


def run_sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    """Label-count sweep: subsample, retrain, re-evaluate, one CSV row per run."""
    with stage_timer("sweep-labels") as held:
        annotations, _ = _load_annotations(req.annotations)
        imagery = _open_grid(req.imagery).read_all()
        val_anns, _ = _load_annotations(req.val_buildings)
        val_polys = [a.exterior for a in val_anns]
        region = _region_from_geojson(_read_text(req.val_region))
        windows = _windows_from_geojson(_read_text(req.windows))
        actual = [w.actual_count for w in windows]
        rows = []
        for n in req.n_labels:
            if n > len(annotations):
                raise StageError(f"cannot subsample {n} of {len(annotations)} labels")
            for rep in range(req.repeats):
                run_seed = derive_seed(req.seed, len(rows))
                subset = subsample_annotations(annotations, n, run_seed)
                mask, _ = _build_mask(subset, imagery, req.buffer_radius_m,
                                      req.apply_buffer, req.merge_roads)
                config = ForestConfig(tree_count=req.trees,
                                      max_depth=req.max_depth,
                                      min_leaf_size=req.min_leaf_size,
                                      seed=run_seed)
                try:
                    model = train_random_forest(imagery, mask, config)
                except ValueError:
                    rows.append({"n_labels": n, "repeat": rep, "seed": run_seed,
                                 "f1": "", "r2": "", "footprints": 0})
                    continue
                prediction = predict_proba(model, imagery, tile_size=req.tile_size)
                binary = GeoRaster(binarize_block(prediction.band(0), "f32", None,
                                                  req.threshold),
                                   imagery.transform, "u8")
                scores = pixel_prf(binary, val_polys, region)
                footprints = polygonize(prediction, threshold=req.threshold,
                                        tile_size=req.tile_size,
                                        dp_tolerance=req.dp_tolerance_m,
                                        min_area=req.min_area_m2)
                predicted = count_in_windows(footprints, windows)
                rows.append({"n_labels": n, "repeat": rep, "seed": run_seed,
                             "f1": scores.f1, "r2": r2_score(actual, predicted),
                             "footprints": len(footprints)})
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["n_labels", "repeat", "seed",
                                                 "f1", "r2", "footprints"])
        writer.writeheader()
        writer.writerows(rows)
        _write_text(req.out_csv, buf.getvalue())
    return schemas.SweepResponse(csv=req.out_csv, rows=len(rows),
                                 stats=held["stats"])


def run_change(req: schemas.ChangeRequest) -> schemas.ChangeResponse:
    with stage_timer("change") as held:
        t0 = _load_footprints(req.footprints_t0)
        t1 = _load_footprints(req.footprints_t1)
        try:
            grid = change_mod.build_change_grid(t0, t1, req.cell_size)
        except ValueError as exc:
            raise StageError(str(exc)) from exc
        _write_text(req.out_grid, grid.to_geojson())
        totals = []
        for fps, adj in ((t0, req.adjustment_t0), (t1, req.adjustment_t1)):
            if adj is None:
                totals.append(None)
            else:
                if len(adj) != 2:
                    raise StageError("adjustment must be [slope, intercept]")
                totals.append(change_mod.adjusted_totals(
                    fps, CountAdjustment(adj[0], adj[1], 0.0), req.window_size))
        delta_sum = sum(grid.delta(k) for k in grid.cells)
    return schemas.ChangeResponse(grid=req.out_grid, cells=len(grid.cells),
                                  delta_sum=delta_sum, audit=grid.audit,
                                  total_t0=totals[0], total_t1=totals[1],
                                  stats=held["stats"])


def run_quality_extract(req: schemas.QualityExtractRequest) -> schemas.QualityExtractResponse:
    with stage_timer("quality-extract") as held:
        footprints = _load_footprints(req.footprints)
        dem = _open_grid(req.dem).read_all() if req.dem else None
        vectors = quality_mod.extract_all_features(footprints, dem)
        labels = {}
        if req.labels_from:
            labeled = _load_footprints(req.labels_from)
            labels = {fp.id: fp.quality for fp in labeled if fp.quality}
        label_col = [labels.get(fp.id, "") for fp in footprints]
        dataset = quality_mod.QualityDataset(vectors, label_col)
        _write_text(req.out_csv, dataset.to_csv())
    return schemas.QualityExtractResponse(
        csv=req.out_csv, rows=len(vectors),
        labeled_rows=sum(1 for l in label_col if l), stats=held["stats"])


def run_quality_train(req: schemas.QualityTrainRequest) -> schemas.QualityTrainResponse:
    with stage_timer("quality-train") as held:
        dataset = quality_mod.QualityDataset.from_csv(_read_text(req.dataset))
        keep = [i for i, l in enumerate(dataset.labels) if l]
        dataset = quality_mod.QualityDataset(
            [dataset.features[i] for i in keep],
            [dataset.labels[i] for i in keep])
        config = quality_mod.GBDTConfig(tree_count=req.tree_count,
                                        learning_rate=req.learning_rate,
                                        max_depth=req.max_depth, seed=req.seed)
        try:
            model = quality_mod.train_gbdt(dataset, config)
            f1 = quality_mod.evaluate_repeated_splits(
                dataset, repeats=req.repeats, test_fraction=req.test_fraction,
                seed=req.seed, config=config)
        except ValueError as exc:
            raise StageError(str(exc)) from exc
        _write_text(req.out_model, quality_mod.gbdt_to_json(model))
    return schemas.QualityTrainResponse(
        model=req.out_model,
        f1_regular_mean=f1["regular"][0], f1_regular_std=f1["regular"][1],
        f1_low_quality_mean=f1["low_quality"][0],
        f1_low_quality_std=f1["low_quality"][1],
        importances=model.importances, stats=held["stats"])


def run_quality_classify(req: schemas.QualityClassifyRequest) -> schemas.QualityClassifyResponse:
    with stage_timer("quality-classify") as held:
        model = quality_mod.gbdt_from_json(_read_text(req.model))
        footprints = _load_footprints(req.footprints)
        dem = _open_grid(req.dem).read_all() if req.dem else None
        classified = quality_mod.classify_footprints(model, footprints, dem)
        _write_text(req.out_footprints, write_footprints(classified))
        n_low = sum(1 for fp in classified if fp.quality == "low_quality")
    return schemas.QualityClassifyResponse(
        footprints=req.out_footprints,
        regular=len(classified.footprints) - n_low, low_quality=n_low,
        stats=held["stats"])
