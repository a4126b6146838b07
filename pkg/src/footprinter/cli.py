"""Thin HTTP client for the processing service.

Every subcommand posts one request to the corresponding endpoint. Without
--server the ASGI app is invoked in-process, so no server needs to be
running; with --server requests go to a remote instance. Exit codes: 0 ok,
1 user error, 2 internal error.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys

import httpx

from .config import PipelineConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are user errors
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _post_local(path: str, payload: dict):
    from .service.app import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://footprinter.local",
                                     timeout=None) as client:
            return await client.post(path, json=payload)
    return asyncio.run(go())


def _post(server: str | None, path: str, payload: dict):
    if server is None:
        return _post_local(path, payload)
    with httpx.Client(base_url=server, timeout=None) as client:
        return client.post(path, json=payload)


def _print_eval_table(body: dict) -> None:
    rows = []
    for key in ("precision", "recall", "f1"):
        if body.get(key) is not None:
            rows.append((key, f"{body[key]:.4f}"))
    for k, v in (body.get("recall_at_k") or {}).items():
        rows.append((f"recall@{k}", f"{v:.4f}"))
    if body.get("r2") is not None:
        rows.append(("r2", f"{body['r2']:.4f}"))
    for key, label in (("adjustment_slope", "adjust_slope"),
                       ("adjustment_intercept", "adjust_intercept"),
                       ("adjustment_rmse", "adjust_rmse")):
        if body.get(key) is not None:
            rows.append((label, f"{body[key]:.4f}"))
    width = max(len(r[0]) for r in rows) if rows else 0
    for name, value in rows:
        print(f"{name:<{width}}  {value}")
    for warning in body.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)


def build_parser() -> _Parser:
    parser = _Parser(prog="footprinter",
                     description="Building footprints from satellite scenes")
    parser.add_argument("--server", default=None,
                        help="service URL; default runs the service in-process")
    parser.add_argument("--config", default=None, help="pipeline config JSON")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log stage timings to stderr")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("serve", help="run the service with uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)

    p = sub.add_parser("init-config", help="write a default config file")
    p.add_argument("path")

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--width", type=int, default=2048)
    p.add_argument("--height", type=int, default=2048)
    p.add_argument("--pixel-size", type=float, default=0.5)
    p.add_argument("--buildings", type=int, default=300)
    p.add_argument("--train-count", type=int, default=150)
    p.add_argument("--color-mode", choices=("easy", "hard"), default="easy")
    p.add_argument("--noise-sigma", type=float, default=8.0)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("rasterize-labels", help="annotations -> label mask")
    p.add_argument("--annotations", required=True)
    p.add_argument("--reference", required=True, help="raster defining the grid")
    p.add_argument("--out-mask", required=True)
    p.add_argument("--buffer-radius", type=float, default=None)
    p.add_argument("--no-buffer", action="store_true")
    p.add_argument("--keep-roads", action="store_true",
                   help="keep road as its own class instead of merging")
    p.add_argument("--labels-crs", choices=("scene", "wgs84"), default="scene")
    p.add_argument("--central-meridian", type=float, default=None)

    p = sub.add_parser("train-rf", help="train the pixel random forest")
    p.add_argument("--imagery", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("predict", help="building probabilities over a scene")
    p.add_argument("--imagery", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-prediction", required=True)
    p.add_argument("--tile-size", type=int, default=None)

    p = sub.add_parser("polygonize", help="prediction raster -> footprints")
    p.add_argument("--prediction", required=True)
    p.add_argument("--out-footprints", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--tile-size", type=int, default=None)
    p.add_argument("--dp-tolerance", type=float, default=None)
    p.add_argument("--min-area", type=float, default=None)
    p.add_argument("--median-kernel", type=int, default=None)

    p = sub.add_parser("eval", help="score footprints against held-out labels")
    p.add_argument("--footprints", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--prediction", default=None)
    p.add_argument("--test-buildings", default=None)
    p.add_argument("--windows", default=None)
    p.add_argument("--val-buildings", default=None)
    p.add_argument("--val-region", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--k", type=float, action="append", default=None,
                   help="recall@k fraction, repeatable (default 0.7)")

    p = sub.add_parser("sweep-labels", help="label-count experiment grid")
    p.add_argument("--imagery", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--val-buildings", required=True)
    p.add_argument("--val-region", required=True)
    p.add_argument("--windows", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--n", type=int, action="append", required=True,
                   help="label count, repeatable")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-buffer", action="store_true")
    p.add_argument("--keep-roads", action="store_true")

    p = sub.add_parser("change", help="two-epoch change grid and totals")
    p.add_argument("--t0", required=True)
    p.add_argument("--t1", required=True)
    p.add_argument("--out-grid", required=True)
    p.add_argument("--cell-size", type=float, default=500.0)
    p.add_argument("--adjust-t0", default=None, help="slope,intercept")
    p.add_argument("--adjust-t1", default=None, help="slope,intercept")
    p.add_argument("--window-size", type=float, default=200.0)

    p = sub.add_parser("quality-extract", help="footprints -> feature CSV")
    p.add_argument("--footprints", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--dem", default=None)
    p.add_argument("--labels-from", default=None,
                   help="footprint GeoJSON carrying quality labels")

    p = sub.add_parser("quality-train", help="train the quality classifier")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repeats", type=int, default=50)
    p.add_argument("--test-fraction", type=float, default=0.25)

    p = sub.add_parser("quality-classify", help="label footprints by quality")
    p.add_argument("--model", required=True)
    p.add_argument("--footprints", required=True)
    p.add_argument("--out-footprints", required=True)
    p.add_argument("--dem", default=None)
    return parser


def _pick(value, fallback):
    return fallback if value is None else value


def _payload(args, cfg: PipelineConfig) -> tuple[str, dict]:
    cmd = args.command
    if cmd == "synth":
        return "/synth", {
            "out_dir": args.out_dir, "width_px": args.width,
            "height_px": args.height, "pixel_size": args.pixel_size,
            "building_count": args.buildings, "train_count": args.train_count,
            "color_mode": args.color_mode, "noise_sigma": args.noise_sigma,
            "seed": _pick(args.seed, cfg.seed)}
    if cmd == "rasterize-labels":
        return "/rasterize-labels", {
            "annotations": args.annotations, "reference": args.reference,
            "out_mask": args.out_mask,
            "buffer_radius_m": _pick(args.buffer_radius, cfg.buffer_radius_m),
            "apply_buffer": cfg.apply_buffer and not args.no_buffer,
            "merge_roads": cfg.merge_roads and not args.keep_roads,
            "labels_crs": args.labels_crs,
            "central_meridian": args.central_meridian}
    if cmd == "train-rf":
        return "/train-rf", {
            "imagery": args.imagery, "mask": args.mask,
            "out_model": args.out_model,
            "trees": _pick(args.trees, cfg.rf_trees),
            "max_depth": _pick(args.max_depth, cfg.rf_max_depth),
            "min_leaf_size": _pick(args.min_leaf, cfg.rf_min_leaf),
            "seed": _pick(args.seed, cfg.seed)}
    if cmd == "predict":
        return "/predict", {
            "imagery": args.imagery, "model": args.model,
            "out_prediction": args.out_prediction,
            "tile_size": _pick(args.tile_size, cfg.tile_size)}
    if cmd == "polygonize":
        return "/polygonize", {
            "prediction": args.prediction, "out_footprints": args.out_footprints,
            "threshold": _pick(args.threshold, cfg.threshold),
            "tile_size": _pick(args.tile_size, cfg.tile_size),
            "dp_tolerance_m": _pick(args.dp_tolerance, cfg.dp_tolerance_m),
            "min_area_m2": _pick(args.min_area, cfg.min_area_m2),
            "median_kernel": _pick(args.median_kernel, cfg.median_kernel)}
    if cmd == "eval":
        return "/eval", {
            "footprints": args.footprints, "out_report": args.out_report,
            "prediction": args.prediction,
            "test_buildings": args.test_buildings, "windows": args.windows,
            "val_buildings": args.val_buildings, "val_region": args.val_region,
            "threshold": _pick(args.threshold, cfg.threshold),
            "k_values": args.k or [0.7]}
    if cmd == "sweep-labels":
        return "/sweep-labels", {
            "imagery": args.imagery, "annotations": args.annotations,
            "val_buildings": args.val_buildings, "val_region": args.val_region,
            "windows": args.windows, "out_csv": args.out_csv,
            "n_labels": args.n, "repeats": args.repeats,
            "seed": _pick(args.seed, cfg.seed),
            "apply_buffer": cfg.apply_buffer and not args.no_buffer,
            "merge_roads": cfg.merge_roads and not args.keep_roads,
            "buffer_radius_m": cfg.buffer_radius_m, "trees": cfg.rf_trees,
            "max_depth": cfg.rf_max_depth, "min_leaf_size": cfg.rf_min_leaf,
            "tile_size": cfg.tile_size, "threshold": cfg.threshold,
            "dp_tolerance_m": cfg.dp_tolerance_m, "min_area_m2": cfg.min_area_m2}
    if cmd == "change":
        def adj(text):
            if text is None:
                return None
            parts = [float(v) for v in text.split(",")]
            return parts
        return "/change", {
            "footprints_t0": args.t0, "footprints_t1": args.t1,
            "out_grid": args.out_grid, "cell_size": args.cell_size,
            "adjustment_t0": adj(args.adjust_t0),
            "adjustment_t1": adj(args.adjust_t1),
            "window_size": args.window_size}
    if cmd == "quality-extract":
        return "/quality-extract", {
            "footprints": args.footprints, "out_csv": args.out_csv,
            "dem": args.dem, "labels_from": args.labels_from}
    if cmd == "quality-train":
        return "/quality-train", {
            "dataset": args.dataset, "out_model": args.out_model,
            "tree_count": _pick(args.trees, cfg.gbdt_trees),
            "learning_rate": _pick(args.learning_rate, cfg.gbdt_learning_rate),
            "max_depth": _pick(args.max_depth, cfg.gbdt_max_depth),
            "seed": _pick(args.seed, cfg.seed), "repeats": args.repeats,
            "test_fraction": args.test_fraction}
    if cmd == "quality-classify":
        return "/quality-classify", {
            "model": args.model, "footprints": args.footprints,
            "out_footprints": args.out_footprints, "dem": args.dem}
    raise SystemExit(1)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="%(name)s %(message)s")
    if args.command == "serve":
        import uvicorn
        from .service.app import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    if args.command == "init-config":
        with open(args.path, "w") as fh:
            fh.write(PipelineConfig().to_json())
        print(f"wrote {args.path}")
        return 0
    try:
        cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    except (OSError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return 1
    path, payload = _payload(args, cfg)
    try:
        response = _post(args.server, path, payload)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 2
    if response.status_code in (400, 404, 422):
        detail = response.json().get("detail", response.text)
        print(f"error: {detail}", file=sys.stderr)
        return 1
    if response.status_code != 200:
        print(f"error: service returned {response.status_code}: {response.text}",
              file=sys.stderr)
        return 2
    body = response.json()
    if args.command == "eval":
        _print_eval_table(body)
    else:
        print(json.dumps(body, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
