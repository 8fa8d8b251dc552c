"""HTTP serving of the batch exchange: POST /predict and POST /train.

One process, one model; requests are handled sequentially.  Errors
answer with ``{"category", "message"}`` details: config for malformed
payloads (422), precondition for predicting without weights (409).  If
``WAREHOUSE_SURROGATE_CHECKPOINT`` names a file, the model is loaded
from it at startup and training rewrites it.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import threading
from contextlib import asynccontextmanager

import torch
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint, \
    spec_hash
from .protocol import ProtocolError, decode_predict, decode_train, \
    predict_response, train_response
from .training import TrainConfig, train

logger = logging.getLogger(__name__)

CHECKPOINT_ENV_VAR = "WAREHOUSE_SURROGATE_CHECKPOINT"


def _error(status: int, category: str, message: str) -> HTTPException:
    return HTTPException(status, detail={"category": category,
                                         "message": message})


class PredictBody(BaseModel):
    version: int
    mode: str
    height: int
    width: int
    layouts: list


class TrainBody(BaseModel):
    version: int
    mode: str
    height: int
    width: int
    records: list
    measure_ranges: list = None
    config: dict = None


class ModelStore:
    """The served model plus the measure ranges its scores map through."""

    def __init__(self):
        self.model = None
        self.measure_ranges = None
        self.checkpoint_path = None
        self.trainings = 0
        self.lock = threading.Lock()

    def load(self, path):
        self.model, self.measure_ranges = load_checkpoint(path)
        self.checkpoint_path = str(path)

    def load_from_env(self):
        path = os.environ.get(CHECKPOINT_ENV_VAR)
        if path:
            self.checkpoint_path = path
            if os.path.exists(path):
                self.model, self.measure_ranges = load_checkpoint(path)


store = ModelStore()


@asynccontextmanager
async def _lifespan(_app):
    try:
        store.load_from_env()
    except CheckpointError as exc:
        logger.warning("checkpoint not loaded: %s", exc)
    yield


app = FastAPI(title="warehouse-surrogate", version=__version__,
              lifespan=_lifespan)


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__,
            "model_loaded": store.model is not None}


@app.post("/predict")
def predict(body: PredictBody):
    with store.lock:
        try:
            grids = decode_predict(body.model_dump(exclude_none=True))
        except ProtocolError as exc:
            raise _error(422, "config", str(exc))
        if store.model is None:
            raise _error(409, "precondition",
                         "no model loaded; train first or configure "
                         f"{CHECKPOINT_ENV_VAR}")
        spec = store.model.spec
        if grids.shape[1:] != (spec.channels, spec.height, spec.width):
            raise _error(422, "config",
                         f"layouts are {grids.shape[2]}x{grids.shape[3]} but "
                         f"the model expects {spec.height}x{spec.width}")
        with torch.no_grad():
            repaired, usage, scores = store.model(torch.from_numpy(grids))
        return predict_response(repaired.numpy(), usage.numpy(),
                                scores.numpy(), store.measure_ranges)


def _train_config(overrides) -> TrainConfig:
    if not overrides:
        return TrainConfig()
    try:
        return dataclasses.replace(TrainConfig(), **overrides)
    except (TypeError, ValueError) as exc:
        raise _error(422, "config", f"bad training config: {exc}")


@app.post("/train")
def run_training(body: TrainBody):
    with store.lock:
        try:
            data = decode_train(body.model_dump(exclude_none=True))
        except ProtocolError as exc:
            raise _error(422, "config", str(exc))
        config = _train_config(body.config)
        warm = store.model
        if warm is not None:
            spec = warm.spec
            if (spec.height, spec.width) != (body.height, body.width):
                warm = None  # dims changed: start a fresh model
        model, curves = train(data, config, model=warm)
        store.model = model
        store.measure_ranges = data.measure_ranges
        store.trainings += 1
        if store.checkpoint_path:
            ref = save_checkpoint(store.checkpoint_path, model,
                                  data.measure_ranges, curves)
        else:
            ref = f"memory:{spec_hash(model.spec)}:{store.trainings}"
        return train_response(curves, len(data), ref)


def serve(host: str = "127.0.0.1", port: int = 8901,
          checkpoint: str = None):  # pragma: no cover - thin uvicorn wrapper
    import uvicorn

    if checkpoint:
        os.environ[CHECKPOINT_ENV_VAR] = str(checkpoint)
    uvicorn.run(app, host=host, port=port)
