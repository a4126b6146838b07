"""FastAPI service exposing every pipeline stage as an endpoint.

Requests carry file paths on storage shared with the service, so scene-sized
rasters never travel over the wire. User-correctable problems map to 400,
anything else to 500.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import PipelineConfig
from ..geojson_io import AnnotationParseError
from ..grid import GridError
from . import schemas, stages

app = FastAPI(title="footprinter", version=__version__)

_USER_ERRORS = (stages.StageError, AnnotationParseError, GridError,
                FileNotFoundError, ValueError)


def _run(fn, req):
    try:
        return fn(req)
    except _USER_ERRORS as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/defaults", response_model=PipelineConfig)
def defaults():
    return PipelineConfig()


@app.post("/synth", response_model=schemas.SynthResponse)
def synth(req: schemas.SynthRequest):
    return _run(stages.run_synth, req)


@app.post("/rasterize-labels", response_model=schemas.RasterizeLabelsResponse)
def rasterize_labels(req: schemas.RasterizeLabelsRequest):
    return _run(stages.run_rasterize_labels, req)


@app.post("/train-rf", response_model=schemas.TrainForestResponse)
def train_rf(req: schemas.TrainForestRequest):
    return _run(stages.run_train_rf, req)


@app.post("/predict", response_model=schemas.PredictResponse)
def predict(req: schemas.PredictRequest):
    return _run(stages.run_predict, req)


@app.post("/polygonize", response_model=schemas.PolygonizeResponse)
def polygonize(req: schemas.PolygonizeRequest):
    return _run(stages.run_polygonize, req)


@app.post("/eval", response_model=schemas.EvalResponse)
def evaluate(req: schemas.EvalRequest):
    return _run(stages.run_eval, req)


@app.post("/sweep-labels", response_model=schemas.SweepResponse)
def sweep_labels(req: schemas.SweepRequest):
    return _run(stages.run_sweep, req)


@app.post("/change", response_model=schemas.ChangeResponse)
def change(req: schemas.ChangeRequest):
    return _run(stages.run_change, req)


@app.post("/quality-extract", response_model=schemas.QualityExtractResponse)
def quality_extract(req: schemas.QualityExtractRequest):
    return _run(stages.run_quality_extract, req)


@app.post("/quality-train", response_model=schemas.QualityTrainResponse)
def quality_train(req: schemas.QualityTrainRequest):
    return _run(stages.run_quality_train, req)


@app.post("/quality-classify", response_model=schemas.QualityClassifyResponse)
def quality_classify(req: schemas.QualityClassifyRequest):
    return _run(stages.run_quality_classify, req)
