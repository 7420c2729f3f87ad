"""HTTP API serving cluster data to the labeling UI and classifying
submissions for platform integration.

One model is shared across requests: reads proceed concurrently, label
writes are serialized behind a lock and persisted to the model file with an
atomic replace before the 204 is returned (last writer wins). Every non-2xx
response body is a single ApiError object: {status, code, message}.
"""
from __future__ import annotations

import os
import threading
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .classify import ClassifierConfig, classify
from .cluster import assign_label
from .errors import FixscopeError, FormatError, ParseError, UnknownCluster
from .minilang import parse_minilang
from .model_io import load_model, model_digest, save_model
from .treeio import read_tree

DEFAULT_BIND = "127.0.0.1:8642"


def api_error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"status": status, "code": code,
                                 "message": message})


class LabelBody(BaseModel):
    label: str


class ClassifyBody(BaseModel):
    source: Optional[str] = None
    tree: Optional[dict] = None
    method: Optional[str] = None
    k: Optional[int] = None
    theta: Optional[float] = None
    delta: Optional[float] = None


def create_app(model_path: str, cors_origin: Optional[str] = None,
               static_dir: Optional[str] = None) -> FastAPI:
    model = load_model(model_path)  # fail fast on a corrupt model
    app = FastAPI(title="fixscope", docs_url=None, redoc_url=None)
    state = {
        "model": model,
        "digest": model_digest(model),
        "path": model_path,
        "write_lock": threading.Lock(),
    }
    app.state.fixscope = state

    if cors_origin:
        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(FixscopeError)
    async def domain_error(request: Request, exc: FixscopeError):
        if isinstance(exc, UnknownCluster):
            return api_error(404, "unknown_cluster", str(exc))
        if isinstance(exc, ParseError):
            return api_error(400, "syntax_error", str(exc))
        if isinstance(exc, FormatError):
            return api_error(400, "format_error", str(exc))
        return api_error(400, "domain_error", str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return api_error(422, "invalid_request", str(exc.errors()[:1]))

    @app.exception_handler(Exception)
    async def unexpected_error(request: Request, exc: Exception):
        return api_error(500, "internal_error", f"{type(exc).__name__}: {exc}")

    @app.exception_handler(404)
    async def not_found(request: Request, exc):
        return api_error(404, "not_found", f"no route {request.url.path}")

    @app.exception_handler(405)
    async def bad_method(request: Request, exc):
        return api_error(405, "method_not_allowed", request.method)

    def medoid_preview(cluster) -> list:
        if cluster.medoid_id is None:
            return []
        script = state["model"].scripts[cluster.medoid_id].script
        return [a.to_record() for a in script.actions[:3]]

    @app.get("/api/health")
    def health():
        return {"status": "ok", "model_digest": state["digest"]}

    @app.get("/api/clusters")
    def clusters():
        return [
            {
                "cluster_id": c.cluster_id,
                "size": c.size,
                "label": c.label,
                "medoid_preview": medoid_preview(c),
            }
            for c in state["model"].clusters
        ]

    @app.get("/api/clusters/{cluster_id}")
    def cluster_detail(cluster_id: int):
        model = state["model"]
        cluster = model.cluster_by_id(cluster_id)
        members = []
        for sid in cluster.member_script_ids:
            ts = model.scripts[sid]
            members.append({
                "script_id": sid,
                "actions": [a.to_record() for a in ts.script.actions],
                "incorrect_src": ts.incorrect_src,
                "correct_src": ts.correct_src,
            })
        return {
            "cluster_id": cluster.cluster_id,
            "label": cluster.label,
            "members": members,
            "medoid_id": cluster.medoid_id,
        }

    @app.put("/api/clusters/{cluster_id}/label", status_code=204)
    def put_label(cluster_id: int, body: LabelBody):
        with state["write_lock"]:
            model = state["model"]
            assign_label(model, cluster_id, body.label)
            save_model(model, state["path"])
            state["digest"] = model_digest(model)
        return Response(status_code=204)

    @app.post("/api/classify")
    def classify_submission(body: ClassifyBody):
        if (body.source is None) == (body.tree is None):
            return api_error(400, "bad_request",
                             "provide exactly one of source or tree")
        tree = parse_minilang(body.source) if body.source is not None \
            else read_tree(body.tree)
        defaults = ClassifierConfig()
        config = ClassifierConfig(
            method=body.method or defaults.method,
            k=body.k if body.k is not None else defaults.k,
            confidence_threshold=body.theta if body.theta is not None
            else defaults.confidence_threshold,
            distance_threshold=body.delta if body.delta is not None
            else defaults.distance_threshold,
        )
        return classify(tree, state["model"], config).to_record()

    @app.get("/api/config")
    def config():
        model = state["model"]
        dc = model.distance_config
        defaults = ClassifierConfig()
        return {
            "matcher_params": {
                "min_height": model.matcher_params.min_height,
                "min_dice": model.matcher_params.min_dice,
                "max_recovery_size": model.matcher_params.max_recovery_size,
            },
            "distance_config": {
                "family": dc.family.value,
                "scheme": dc.scheme.value,
                "vocabulary_size": len(dc.vocabulary) if dc.vocabulary else None,
                "autoencoder": dc.autoencoder is not None,
            },
            "clustering": {
                "linkage": model.linkage,
                "cut_threshold": model.cut_threshold,
                "min_cluster_size": model.min_cluster_size,
            },
            "classifier_defaults": {
                "method": defaults.method,
                "k": defaults.k,
                "theta": defaults.confidence_threshold,
                "delta": defaults.distance_threshold,
                "vote_epsilon": defaults.vote_epsilon,
            },
        }

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="static")

    return app


def serve(model_path: str, bind_address: Optional[str] = None,
          static_dir: Optional[str] = None,
          cors_origin: Optional[str] = None) -> None:
    """Run the API with uvicorn until interrupted."""
    import uvicorn

    bind = bind_address or os.environ.get("FIXSCOPE_BIND", DEFAULT_BIND)
    host, _, port = bind.rpartition(":")
    app = create_app(model_path, cors_origin=cors_origin,
                     static_dir=static_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
