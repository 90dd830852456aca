"""HTTP serving layer.

Request bodies are parsed by hand instead of through response-model
validation so that a malformed body is answered with a plain 400, which is
what callers of the wire contract expect.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .examples import LABELS, ExampleFormatError, load_examples
from .training import TrainingConfig, load_classifier, save_classifier, train
from .verbalizer import UntokenizableLabelWord

_TRAIN_FIELDS = {"training_file", "epochs", "learning_rate", "seed"}


def _bad_request(detail: str) -> JSONResponse:
    return JSONResponse({"detail": detail}, status_code=400)


def create_app(model_path: str | Path | None = None) -> FastAPI:
    """Build the service; if ``model_path`` exists it is loaded at startup.

    When a path is given, every successfully trained model is also saved
    there, so a restarted service comes back up serving instead of loading.
    """
    app = FastAPI()
    app.state.model_path = Path(model_path) if model_path else None
    app.state.classifier = None
    app.state.model_version = None
    app.state.jobs = {}
    app.state.active_job = None
    app.state.lock = threading.Lock()

    if app.state.model_path and app.state.model_path.exists():
        app.state.classifier, app.state.model_version = load_classifier(app.state.model_path)

    @app.get("/health")
    def health():
        if app.state.classifier is None:
            return JSONResponse({"status": "loading"}, status_code=503)
        return {"status": "ok", "model_version": app.state.model_version}

    @app.post("/classify")
    async def classify(request: Request):
        classifier = app.state.classifier
        if classifier is None:
            return JSONResponse({"detail": "no model loaded"}, status_code=503)
        try:
            body = json.loads(await request.body())
        except (UnicodeDecodeError, json.JSONDecodeError):
            return _bad_request("body must be a JSON object")
        if not isinstance(body, dict):
            return _bad_request("body must be a JSON object")
        text = body.get("text")
        head = body.get("head")
        if not isinstance(text, str) or not isinstance(head, str):
            return _bad_request("'text' and 'head' must be provided as strings")
        try:
            distribution = classifier.distribution(text, head)
        except ValueError as exc:
            return _bad_request(str(exc))
        label = max(LABELS, key=lambda lab: distribution[lab])
        return {"label": label, "scores": {lab: distribution[lab] for lab in LABELS}}

    @app.post("/train")
    async def start_training(request: Request):
        try:
            body = json.loads(await request.body())
        except (UnicodeDecodeError, json.JSONDecodeError):
            return _bad_request("body must be a JSON object")
        if not isinstance(body, dict):
            return _bad_request("body must be a JSON object")
        unknown = set(body) - _TRAIN_FIELDS
        if unknown:
            return _bad_request(f"unknown fields: {sorted(unknown)}")
        training_file = body.get("training_file")
        if not isinstance(training_file, str):
            return _bad_request("'training_file' must be provided as a string")
        if not Path(training_file).is_file():
            return _bad_request(f"training file not found: {training_file}")
        try:
            config = TrainingConfig(
                epochs=_expect_int(body, "epochs", TrainingConfig.epochs),
                learning_rate=_expect_number(body, "learning_rate", TrainingConfig.learning_rate),
                seed=_expect_int(body, "seed", TrainingConfig.seed),
            )
        except (TypeError, ValueError) as exc:
            return _bad_request(str(exc))

        with app.state.lock:
            if app.state.active_job is not None:
                return JSONResponse(
                    {"detail": "a training job is already running", "job_id": app.state.active_job},
                    status_code=409,
                )
            job_id = uuid.uuid4().hex
            app.state.active_job = job_id
            app.state.jobs[job_id] = {"status": "running"}

        worker = threading.Thread(
            target=_run_training, args=(app, job_id, training_file, config), daemon=True
        )
        worker.start()
        return JSONResponse({"job_id": job_id, "status": "running"}, status_code=202)

    @app.get("/train/{job_id}")
    def job_status(job_id: str):
        with app.state.lock:
            job = app.state.jobs.get(job_id)
            if job is None:
                return JSONResponse({"detail": f"unknown job {job_id}"}, status_code=404)
            return {"job_id": job_id, **job}

    return app


def _expect_int(body: dict, field: str, default: int) -> int:
    value = body.get(field, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"'{field}' must be an integer")
    return value


def _expect_number(body: dict, field: str, default: float) -> float:
    value = body.get(field, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise TypeError(f"'{field}' must be a number")
    return float(value)


def _run_training(app: FastAPI, job_id: str, training_file: str, config: TrainingConfig) -> None:
    try:
        examples = load_examples(training_file)
        classifier = train(examples, config)
    except (ExampleFormatError, UntokenizableLabelWord, ValueError, OSError) as exc:
        with app.state.lock:
            app.state.jobs[job_id] = {"status": "failed", "error": str(exc)}
            app.state.active_job = None
        return

    version = f"{config.base_model_id}-{job_id[:8]}"
    if app.state.model_path:
        tmp = app.state.model_path.with_name(app.state.model_path.name + ".tmp")
        save_classifier(classifier, tmp, version)
        os.replace(tmp, app.state.model_path)
    with app.state.lock:
        app.state.classifier = classifier
        app.state.model_version = version
        app.state.jobs[job_id] = {
            "status": "done",
            "model_version": version,
            "loss_per_epoch": classifier.loss_per_epoch,
        }
        app.state.active_job = None
