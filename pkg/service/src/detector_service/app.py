"""FastAPI application serving detections over the exchange wire protocol.

The service accepts a PNG by POST and answers with one detection-exchange
record, exactly the format the harness's http backend consumes.  Inference
backends are pluggable: the built-in stub needs no ML runtime, while a real
model can be dropped in by implementing the two-method ModelBackend
protocol.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from fastapi import FastAPI, Query, Request, Response

from transplant_bench.detector import (
    STUB_COLOR_TABLE,
    DetectionSet,
    serialize_record,
    stub_detect,
)
from transplant_bench.pngio import decode_png

DEFAULT_CATEGORY_TABLE = {cid: name for _, cid, name in STUB_COLOR_TABLE}


class ModelBackend(Protocol):
    """Minimal contract an inference backend must satisfy."""

    def load(self) -> None:
        """Load weights; the service reports ready only after this returns."""

    def detect(self, image: np.ndarray, case_id: str) -> DetectionSet:
        """Run inference; boxes in pixel coordinates of the given image."""


class StubBackend:
    """Deterministic rectangle detector; protocol conformance without ML.

    Delegates to the harness's built-in detector so records produced over
    HTTP are byte-equal to records produced in-process on the same pixels.
    """

    model_id = "stub-rectangles-v1"

    def __init__(self):
        self._loaded = False

    def load(self) -> None:
        self._loaded = True

    def detect(self, image: np.ndarray, case_id: str) -> DetectionSet:
        return stub_detect(image, case_id)


@dataclass(frozen=True)
class ServiceConfig:
    model_id: str = StubBackend.model_id
    score_floor: float = 0.0
    host: str = "127.0.0.1"
    port: int = 8000
    category_table: dict[int, str] = field(
        default_factory=lambda: dict(DEFAULT_CATEGORY_TABLE)
    )

    def __post_init__(self):
        if not 0.0 <= self.score_floor < 1.0:
            raise ValueError(f"score_floor must be in [0, 1), got {self.score_floor}")


def create_app(
    config: ServiceConfig | None = None,
    backend: ModelBackend | None = None,
    load_on_startup: bool = True,
) -> FastAPI:
    config = config or ServiceConfig()
    backend = backend or StubBackend()
    state = {"ready": False}
    inference_lock = threading.Lock()

    def load_model():
        backend.load()
        state["ready"] = True

    @asynccontextmanager
    async def lifespan(_app):
        if load_on_startup:
            load_model()
        yield

    app = FastAPI(title="detector-service", lifespan=lifespan)
    app.state.load_model = load_model

    @app.get("/healthz")
    def healthz():
        return {"model_id": config.model_id, "ready": state["ready"]}

    @app.post("/detect")
    async def detect(request: Request, case_id: str = Query(default="")):
        if not state["ready"]:
            return Response(
                content='{"error":"model not loaded"}',
                status_code=503,
                media_type="application/json",
            )
        body = await request.body()
        try:
            image = decode_png(body)
        except Exception as e:
            return Response(
                content=f'{{"error":"undecodable PNG image: {e}"}}',
                status_code=400,
                media_type="application/json",
            )
        # the service never rescales; boxes refer to submitted-image pixels
        with inference_lock:
            ds = backend.detect(image, case_id)
        if config.score_floor > 0.0:
            kept = tuple(d for d in ds.detections if d.score >= config.score_floor)
            ds = DetectionSet(
                case_id=ds.case_id, detections=kept, detector_id=ds.detector_id
            )
        ds = DetectionSet(
            case_id=ds.case_id,
            detections=ds.detections,
            detector_id=config.model_id,
        )
        return Response(content=serialize_record(ds), media_type="application/json")

    return app
