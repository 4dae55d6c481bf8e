"""Wire contract for the capability servers: routes, versioning, validation.

Every request and reply is a flat JSON object carrying schema_version "1".
Images travel inline as base64-encoded PNG bytes; the optional ref block
(content hash plus dimensions) is advisory and receivers recompute it, so
servers fill it in but never trust it on the way in.

Validation here is structural and mirrors the published JSON Schemas: unknown
keys are rejected, required fields must be present with the right types, and
boxes must be ordered xyxy pixel coordinates. Anything that fails raises
RequestError, which the server layer turns into a 400 with a versioned error
body.
"""

from __future__ import annotations

__all__ = [
    "CAPABILITIES",
    "ROUTES",
    "SCHEMA_VERSION",
    "RequestError",
    "check_version",
    "error_body",
    "validate_request",
]

SCHEMA_VERSION = "1"

ROUTES = {
    "text_to_image": "/v1/txt2img",
    "instruct_edit": "/v1/edit",
    "region_inpaint": "/v1/inpaint",
    "detect": "/v1/detect",
    "segment": "/v1/segment",
    "caption": "/v1/caption",
    "score": "/v1/score",
}

CAPABILITIES = tuple(ROUTES)


class RequestError(ValueError):
    """The request body violates the wire schema; retrying it is pointless."""


def error_body(message: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "error": message}


def check_version(body: object) -> None:
    if not isinstance(body, dict):
        raise RequestError("request body must be a JSON object")
    version = body.get("schema_version")
    if version != SCHEMA_VERSION:
        raise RequestError(
            f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION!r}"
        )


def _require_str(body: dict, key: str) -> str:
    value = body.get(key)
    if not isinstance(value, str) or not value:
        raise RequestError(f"{key} must be a non-empty string")
    return value


def _require_int(body: dict, key: str, minimum: int) -> int:
    value = body.get(key)
    # bool is an int subclass in Python but not an integer on the wire.
    if isinstance(value, bool) or not isinstance(value, int):
        raise RequestError(f"{key} must be an integer")
    if value < minimum:
        raise RequestError(f"{key} must be >= {minimum}")
    return value


def _check_keys(body: dict, allowed: set[str], where: str = "request") -> None:
    unknown = set(body) - allowed
    if unknown:
        raise RequestError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


def _check_payload(body: dict, key: str = "image") -> None:
    payload = body.get(key)
    if not isinstance(payload, dict):
        raise RequestError(f"{key} must be an object with png_base64")
    _check_keys(payload, {"png_base64", "ref"}, where=key)
    data = payload.get("png_base64")
    if not isinstance(data, str) or not data:
        raise RequestError(f"{key}.png_base64 must be a non-empty string")
    ref = payload.get("ref")
    if ref is None:
        return
    if not isinstance(ref, dict):
        raise RequestError(f"{key}.ref must be an object")
    _check_keys(ref, {"id", "width", "height", "storage_path"}, where=f"{key}.ref")
    for field in ("id", "width", "height"):
        if field not in ref:
            raise RequestError(f"{key}.ref is missing {field}")


def _check_box(value: object, where: str) -> None:
    if not isinstance(value, list) or len(value) != 4:
        raise RequestError(f"{where} must be a list of four numbers")
    for coord in value:
        if isinstance(coord, bool) or not isinstance(coord, (int, float)):
            raise RequestError(f"{where} must contain only numbers")
    if not (value[0] < value[2] and value[1] < value[3]):
        raise RequestError(f"{where} must satisfy x1 < x2 and y1 < y2")


def _validate_text_to_image(body: dict) -> None:
    _check_keys(body, {"schema_version", "prompt", "canvas", "seed", "count"})
    _require_str(body, "prompt")
    canvas = body.get("canvas")
    if not isinstance(canvas, dict):
        raise RequestError("canvas must be an object with width and height")
    _check_keys(canvas, {"width", "height"}, where="canvas")
    _require_int(canvas, "width", 1)
    _require_int(canvas, "height", 1)
    _require_int(body, "seed", 0)
    if "count" in body:
        _require_int(body, "count", 1)


def _validate_instruct_edit(body: dict) -> None:
    _check_keys(body, {"schema_version", "image", "instruction", "seed"})
    _check_payload(body)
    _require_str(body, "instruction")
    _require_int(body, "seed", 0)


def _validate_region_inpaint(body: dict) -> None:
    _check_keys(body, {"schema_version", "image", "box", "label", "seed"})
    _check_payload(body)
    _check_box(body.get("box"), "box")
    _require_str(body, "label")
    _require_int(body, "seed", 0)


def _validate_detect(body: dict) -> None:
    _check_keys(body, {"schema_version", "image", "labels"})
    _check_payload(body)
    labels = body.get("labels")
    if not isinstance(labels, list) or not labels:
        raise RequestError("labels must be a non-empty list")
    for label in labels:
        if not isinstance(label, str) or not label:
            raise RequestError("labels must contain only non-empty strings")


def _validate_segment(body: dict) -> None:
    _check_keys(body, {"schema_version", "image", "boxes"})
    _check_payload(body)
    boxes = body.get("boxes")
    if not isinstance(boxes, list) or not boxes:
        raise RequestError("boxes must be a non-empty list")
    for index, box in enumerate(boxes):
        _check_box(box, f"boxes[{index}]")


def _validate_caption(body: dict) -> None:
    _check_keys(body, {"schema_version", "image"})
    _check_payload(body)


def _validate_score(body: dict) -> None:
    _check_keys(body, {"schema_version", "image", "text"})
    _check_payload(body)
    _require_str(body, "text")


_VALIDATORS = {
    "text_to_image": _validate_text_to_image,
    "instruct_edit": _validate_instruct_edit,
    "region_inpaint": _validate_region_inpaint,
    "detect": _validate_detect,
    "segment": _validate_segment,
    "caption": _validate_caption,
    "score": _validate_score,
}


def validate_request(capability: str, body: object) -> dict:
    """Check version then shape; returns the body for convenience."""
    check_version(body)
    assert isinstance(body, dict)
    _VALIDATORS[capability](body)
    return body
