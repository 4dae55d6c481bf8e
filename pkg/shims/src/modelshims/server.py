"""HTTP layer: one FastAPI app per capability server.

The app exposes exactly two endpoints: GET /healthz reporting the capability
it serves, and the capability's POST route. Request bodies are parsed and
validated by hand so every rejection is a 400 carrying a versioned error
body ({"schema_version": "1", "error": ...}); nothing is ever answered with
a bare framework error. Unexpected failures become versioned 500s, which
clients treat as retryable.

Inference is serialized with a process-wide lock: real backends own a single
accelerator, so concurrent requests queue rather than interleave. Handlers
run in the framework's worker threads, keeping /healthz responsive while a
slow generation holds the lock.
"""

from __future__ import annotations

import json
import threading

from fastapi import FastAPI, Request, Response
from fastapi.concurrency import run_in_threadpool

from .imaging import decode_payload, payload_to_wire, rle_counts
from .models import ShimConfig, load_model
from .wire import ROUTES, SCHEMA_VERSION, RequestError, error_body, validate_request

__all__ = ["build_app", "serve"]


def _reply_text_to_image(model, body: dict) -> dict:
    canvas = body["canvas"]
    images = model.generate(
        body["prompt"],
        canvas["width"],
        canvas["height"],
        body["seed"],
        body.get("count", 1),
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "images": [payload_to_wire(pixels) for pixels in images],
    }


def _reply_instruct_edit(model, body: dict) -> dict:
    pixels = decode_payload(body["image"])
    edited = model.edit(pixels, body["instruction"], body["seed"])
    return {"schema_version": SCHEMA_VERSION, "image": payload_to_wire(edited)}


def _reply_region_inpaint(model, body: dict) -> dict:
    pixels = decode_payload(body["image"])
    filled = model.inpaint(pixels, tuple(body["box"]), body["label"], body["seed"])
    return {"schema_version": SCHEMA_VERSION, "image": payload_to_wire(filled)}


def _reply_detect(model, body: dict) -> dict:
    pixels = decode_payload(body["image"])
    found = model.detect(pixels, list(body["labels"]))
    return {
        "schema_version": SCHEMA_VERSION,
        "objects": [
            {"label": label, "box": [float(c) for c in box], "score": float(score)}
            for label, box, score in found
        ],
    }


def _reply_segment(model, body: dict) -> dict:
    pixels = decode_payload(body["image"])
    masks = model.segment(pixels, [tuple(box) for box in body["boxes"]])
    return {
        "schema_version": SCHEMA_VERSION,
        "masks": [
            {
                "box_index": index,
                "width": int(mask.shape[1]),
                "height": int(mask.shape[0]),
                "counts": rle_counts(mask),
            }
            for index, mask in enumerate(masks)
        ],
    }


def _reply_caption(model, body: dict) -> dict:
    pixels = decode_payload(body["image"])
    return {"schema_version": SCHEMA_VERSION, "caption": model.caption(pixels)}


def _reply_score(model, body: dict) -> dict:
    pixels = decode_payload(body["image"])
    return {"schema_version": SCHEMA_VERSION, "score": float(model.score(pixels, body["text"]))}


_HANDLERS = {
    "text_to_image": _reply_text_to_image,
    "instruct_edit": _reply_instruct_edit,
    "region_inpaint": _reply_region_inpaint,
    "detect": _reply_detect,
    "segment": _reply_segment,
    "caption": _reply_caption,
    "score": _reply_score,
}


def _json_response(body: dict, status: int = 200) -> Response:
    return Response(
        content=json.dumps(body), status_code=status, media_type="application/json"
    )


def build_app(config: ShimConfig, model=None) -> FastAPI:
    """Assemble the app for one capability; loads the model unless given one."""
    if model is None:
        model = load_model(config)
    handler = _HANDLERS[config.capability]
    app = FastAPI(title=f"{config.capability} shim", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.model = model
    app.state.inference_lock = threading.Lock()

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "status": "ok",
            "capability": config.capability,
            "model": model.model_id,
            "device": model.device,
        }

    def answer(body: dict) -> dict:
        validate_request(config.capability, body)
        with app.state.inference_lock:
            return handler(model, body)

    @app.post(ROUTES[config.capability])
    async def infer(request: Request) -> Response:
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _json_response(error_body(f"request body is not valid JSON: {exc}"), 400)
        try:
            reply = await run_in_threadpool(answer, body)
        except RequestError as exc:
            return _json_response(error_body(str(exc)), 400)
        except Exception as exc:
            return _json_response(error_body(f"inference failed: {exc}"), 500)
        return _json_response(reply)

    return app


def serve(config: ShimConfig, model=None, host: str = "127.0.0.1") -> None:
    """Run one capability server; blocks until the process is stopped.

    The model is loaded (or passed in) before uvicorn ever binds the port, so
    a misconfigured model never results in a listening-but-broken server.
    """
    import uvicorn

    app = build_app(config, model=model)
    uvicorn.run(app, host=host, port=config.port, log_level="warning")
