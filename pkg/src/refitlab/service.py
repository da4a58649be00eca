"""HTTP face of the workbench: the /v1 endpoint suite.

Serves many concurrent readers (search, viz, info, history) against the live
model; mutations (refit, undo) go through a non-blocking writer gate and are
rejected with a conflict while another mutation is in flight. Every successful
response embeds the model revision so clients can detect staleness.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import errors
from . import refitting as refit_engine
from .model import (
    EmbeddingModel,
    display_token,
    load_word2vec_binary,
    load_word2vec_text,
    save_model,
)
from .queries import Query, distance_matrix, neighbor_graph, project_2d, search
from .refitting import ActionLog, RefitParams, RefitRequest

# module error -> (HTTP status, stable API code); subclass order matters,
# the first match wins
ERROR_CODES: tuple[tuple[type, int, str], ...] = (
    (errors.UnknownTokenError, 404, "unknown_token"),
    (errors.InvalidQueryError, 400, "bad_query"),
    (errors.ZeroVectorError, 422, "zero_vector"),
    (errors.WriterBusyError, 409, "conflict"),
    (errors.EmptyLogError, 409, "conflict"),
    (errors.LineageMismatchError, 409, "conflict"),
    (errors.FormatError, 500, "io"),
    (errors.DimensionMismatchError, 400, "bad_request"),
    (errors.ZeroDenominatorError, 400, "bad_request"),
    (errors.InvalidRequestError, 400, "bad_request"),
    (errors.RefitlabError, 400, "bad_request"),
)


@dataclass
class ServiceConfig:
    """Process configuration; file values are overridden by environment
    (MODEL_PATH, LISTEN_ADDR, LOG_PATH) and then by CLI flags."""

    model_path: str | None = None
    model_format: str = "binary"
    max_vocab: int | None = None
    listen_address: str = "127.0.0.1:8000"
    default_k: int = 10
    log_path: str = "refit_actions.jsonl"
    checkpoint_dir: str = "checkpoints"
    ui_dir: str | None = None

    _FIELDS = (
        "model_path",
        "model_format",
        "max_vocab",
        "listen_address",
        "default_k",
        "log_path",
        "checkpoint_dir",
        "ui_dir",
    )

    def __post_init__(self):
        if self.default_k < 1:
            raise ValueError(f"default_k must be at least 1, got {self.default_k}")
        if self.model_format not in ("binary", "text"):
            raise ValueError(f"model_format must be binary or text, got {self.model_format!r}")

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(data) - set(cls._FIELDS)
        if unknown:
            raise ValueError(f"unknown config key(s) in {path}: {sorted(unknown)}")
        return cls(**data)

    def apply_env(self, env=os.environ) -> "ServiceConfig":
        if env.get("MODEL_PATH"):
            self.model_path = env["MODEL_PATH"]
        if env.get("LISTEN_ADDR"):
            self.listen_address = env["LISTEN_ADDR"]
        if env.get("LOG_PATH"):
            self.log_path = env["LOG_PATH"]
        return self


@dataclass
class ServiceState:
    """Everything one service process owns: the live model, its action log,
    the configuration, and the exclusive-writer gate."""

    config: ServiceConfig
    model: EmbeddingModel
    log: ActionLog
    writer_gate: threading.Lock = field(default_factory=threading.Lock)


def build_state(config: ServiceConfig) -> ServiceState:
    """Load the model (and resume any existing action log) per the config."""
    if not config.model_path:
        raise ValueError("no model path configured")
    loader = load_word2vec_binary if config.model_format == "binary" else load_word2vec_text
    model = loader(config.model_path, max_rows=config.max_vocab)
    log = ActionLog(config.log_path)
    if log.entries:
        refit_engine.replay(model, log)
    return ServiceState(config=config, model=model, log=log)


class RefitParamsBody(BaseModel):
    alpha: float = 1.0
    beta_scheme: str = "inverse_degree"
    iterations: int = 10
    convergence_epsilon: float = 1e-6


class RefitBody(BaseModel):
    mode: str
    terms: list[str]
    target: Optional[str] = None
    params: Optional[RefitParamsBody] = None


class SaveBody(BaseModel):
    format: str = "binary"
    name: str


def _classify(exc: Exception) -> tuple[int, str]:
    for etype, status, code in ERROR_CODES:
        if isinstance(exc, etype):
            return status, code
    return 500, "io"


def _error_detail(exc: Exception):
    if isinstance(exc, errors.UnknownTokenError):
        return {"token": exc.token}
    return None


# wire-level conveniences for the mode parameter
_MODE_ALIASES = {"add": "additive", "sub": "subtractive"}


def _split_terms(raw: str) -> list[str]:
    terms = [t.strip() for t in raw.split(",")]
    terms = [t for t in terms if t]
    if not terms:
        raise errors.InvalidQueryError("no terms given")
    return terms


def _score_display(value: float) -> str:
    return f"{value:.4f}"


def _hit_json(token: str, score: float) -> dict:
    return {
        "token": token,
        "label": display_token(token),
        "score": score,
        "score_display": _score_display(score),
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="refitlab", docs_url=None, redoc_url=None)

    def error_response(status: int, code: str, exc: Exception) -> JSONResponse:
        body = {
            "revision": state.model.revision,
            "error": {"code": code, "message": str(exc), "detail": _error_detail(exc)},
        }
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(errors.RefitlabError)
    def handle_module_error(request: Request, exc: errors.RefitlabError):
        status, code = _classify(exc)
        return error_response(status, code, exc)

    @app.exception_handler(OSError)
    def handle_os_error(request: Request, exc: OSError):
        return error_response(500, "io", exc)

    @app.exception_handler(RequestValidationError)
    def handle_validation_error(request: Request, exc: RequestValidationError):
        return error_response(400, "bad_request", exc)

    def parse_query(mode: str, terms: str, k: int | None, exclude: bool) -> Query:
        return Query(
            mode=_MODE_ALIASES.get(mode, mode),
            terms=tuple(_split_terms(terms)),
            k=state.config.default_k if k is None else k,
            exclude_inputs=exclude,
        )

    def acquire_writer():
        if not state.writer_gate.acquire(blocking=False):
            raise errors.WriterBusyError("another refit or undo is in flight")

    @app.get("/")
    def root():
        return {
            "service": "refitlab",
            "revision": state.model.revision,
            "endpoints": [
                "/v1/model/info",
                "/v1/search",
                "/v1/refit",
                "/v1/viz/graph",
                "/v1/viz/projection",
                "/v1/viz/matrix",
                "/v1/history",
                "/v1/history/undo",
                "/v1/model/save",
            ],
        }

    @app.get("/v1/model/info")
    def model_info():
        return {
            "vocab_size": len(state.model),
            "dims": state.model.dims,
            "revision": state.model.revision,
            "source": state.config.model_path,
            "refit_count": len(state.log),
        }

    @app.get("/v1/search")
    def search_endpoint(
        mode: str = "single", terms: str = "", k: int | None = None, exclude: bool = True
    ):
        query = parse_query(mode, terms, k, exclude)
        results = search(state.model, query)
        return {
            "revision": results.revision,
            "query": {
                "mode": query.mode,
                "terms": list(query.terms),
                "k": query.k,
                "exclude_inputs": query.exclude_inputs,
            },
            "hits": [_hit_json(t, s) for t, s in results.hits],
        }

    @app.post("/v1/refit")
    def refit_endpoint(body: RefitBody):
        params = (
            RefitParams() if body.params is None
            else RefitParams.from_dict(body.params.model_dump())
        )
        request = RefitRequest(
            mode=body.mode, group=tuple(body.terms), target=body.target, params=params
        )
        acquire_writer()
        try:
            report = refit_engine.refit(state.model, request, log=state.log)
        finally:
            state.writer_gate.release()
        payload = report.to_dict()
        for pair in payload["pairs"]:
            pair["label_a"] = display_token(pair["a"])
            pair["label_b"] = display_token(pair["b"])
            pair["before_display"] = _score_display(pair["before"])
            pair["after_display"] = _score_display(pair["after"])
        return {"revision": report.revisions[1], **payload}

    @app.get("/v1/viz/graph")
    def viz_graph(
        mode: str = "single",
        terms: str = "",
        k: int | None = None,
        exclude: bool = True,
        depth: int = 1,
    ):
        query = parse_query(mode, terms, k, exclude)
        return neighbor_graph(state.model, query, k=query.k, depth=depth)

    @app.get("/v1/viz/projection")
    def viz_projection(tokens: str = ""):
        projection = project_2d(state.model, _split_terms(tokens))
        return {
            "revision": projection.revision,
            "points": [
                {"token": t, "label": display_token(t), "x": x, "y": y}
                for t, x, y in projection.points
            ],
        }

    @app.get("/v1/viz/matrix")
    def viz_matrix(tokens: str = ""):
        result = distance_matrix(state.model, _split_terms(tokens))
        return {
            "revision": result.revision,
            "tokens": list(result.tokens),
            "labels": [display_token(t) for t in result.tokens],
            "matrix": [[float(v) for v in row] for row in result.matrix],
        }

    @app.get("/v1/history")
    def history():
        return {
            "revision": state.model.revision,
            "entries": [entry.to_dict() for entry in state.log],
        }

    @app.post("/v1/history/undo")
    def undo_endpoint():
        acquire_writer()
        try:
            revision = refit_engine.undo(state.model, state.log)
        finally:
            state.writer_gate.release()
        return {"revision": revision}

    @app.post("/v1/model/save")
    def save_endpoint(body: SaveBody):
        if body.format not in ("binary", "text"):
            raise errors.InvalidRequestError(f"unknown format: {body.format!r}")
        name = body.name
        if not name or Path(name).name != name or name in (".", ".."):
            raise errors.InvalidRequestError(f"checkpoint name must be a bare filename, got {name!r}")
        checkpoint_dir = Path(state.config.checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
        dest = checkpoint_dir / name
        if state.config.model_path is not None:
            source = Path(state.config.model_path).resolve()
            if dest.resolve() == source:
                raise errors.InvalidRequestError("refusing to overwrite the source model")
        dest.write_bytes(save_model(state.model, body.format))
        return {"revision": state.model.revision, "path": str(dest)}

    if state.config.ui_dir and Path(state.config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=state.config.ui_dir, html=True), name="ui")

    return app
