"""Regenerate the wire-protocol conformance suite under conformance/.

The suite has two parts:

  schemas/  one JSON Schema (draft 2020-12) per capability and direction,
            describing exactly what travels over each /v1/... route
  goldens/  a frozen request body per capability, plus the reply the
            in-process mock world gives it (world seed 0)

Any server that implements a capability route must accept the golden request
and answer with a body that validates against the reply schema. Reply golden
values are specific to the mock world; other backends only need schema
validity.

Run from the repository root:  python3 scripts/make_conformance.py
"""

import json
from pathlib import Path

from synthpipe.backends.mock import make_mock_world
from synthpipe.backends.protocol import (
    CapabilityKind,
    CaptionRequest,
    ChatRequest,
    DetectRequest,
    EditRequest,
    GenRequest,
    InpaintRequest,
    ROUTES,
    ScoreRequest,
    SegmentRequest,
    reply_to_wire,
    request_to_wire,
)
from synthpipe.core import Box, Canvas, LabelWord
from synthpipe.prompts.render import render_visual_descriptor

ROOT = Path(__file__).resolve().parent.parent / "conformance"

VERSION = {"const": "1"}

BOX = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 4,
    "maxItems": 4,
    "description": "xyxy pixel coordinates [x1, y1, x2, y2] with x1 < x2, y1 < y2",
}

IMAGE_REF = {
    "type": "object",
    "required": ["id", "width", "height"],
    "properties": {
        "id": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "storage_path": {"type": "string"},
    },
    "additionalProperties": False,
}

PAYLOAD = {
    "type": "object",
    "required": ["png_base64"],
    "properties": {
        "png_base64": {
            "type": "string",
            "minLength": 1,
            "pattern": "^[A-Za-z0-9+/]+={0,2}$",
            "description": "base64-encoded PNG bytes",
        },
        "ref": IMAGE_REF,
    },
    "additionalProperties": False,
}

DETECTED_OBJECT = {
    "type": "object",
    "required": ["label", "box", "score"],
    "properties": {
        "label": {"type": "string", "minLength": 1},
        "box": BOX,
        "score": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "additionalProperties": False,
}

SEGMENT_MASK = {
    "type": "object",
    "required": ["box_index", "counts", "width", "height"],
    "properties": {
        "box_index": {"type": "integer", "minimum": 0},
        "counts": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 1,
            "description": "run lengths alternating off/on, row-major, starting with off",
        },
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

REQUEST_SCHEMAS = {
    CapabilityKind.CHAT: {
        "required": ["schema_version", "messages"],
        "properties": {
            "schema_version": VERSION,
            "messages": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["role", "content"],
                    "properties": {
                        "role": {"type": "string", "minLength": 1},
                        "content": {"type": "string"},
                    },
                    "additionalProperties": False,
                },
            },
            "temperature": {"type": "number", "minimum": 0},
        },
    },
    CapabilityKind.TEXT_TO_IMAGE: {
        "required": ["schema_version", "prompt", "canvas", "seed"],
        "properties": {
            "schema_version": VERSION,
            "prompt": {"type": "string", "minLength": 1},
            "canvas": {
                "type": "object",
                "required": ["width", "height"],
                "properties": {
                    "width": {"type": "integer", "minimum": 1},
                    "height": {"type": "integer", "minimum": 1},
                },
                "additionalProperties": False,
            },
            "seed": {"type": "integer", "minimum": 0},
            "count": {"type": "integer", "minimum": 1},
        },
    },
    CapabilityKind.INSTRUCT_EDIT: {
        "required": ["schema_version", "image", "instruction", "seed"],
        "properties": {
            "schema_version": VERSION,
            "image": PAYLOAD,
            "instruction": {"type": "string", "minLength": 1},
            "seed": {"type": "integer", "minimum": 0},
        },
    },
    CapabilityKind.REGION_INPAINT: {
        "required": ["schema_version", "image", "box", "label", "seed"],
        "properties": {
            "schema_version": VERSION,
            "image": PAYLOAD,
            "box": BOX,
            "label": {"type": "string", "minLength": 1},
            "seed": {"type": "integer", "minimum": 0},
        },
    },
    CapabilityKind.DETECT: {
        "required": ["schema_version", "image", "labels"],
        "properties": {
            "schema_version": VERSION,
            "image": PAYLOAD,
            "labels": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "string", "minLength": 1},
            },
        },
    },
    CapabilityKind.SEGMENT: {
        "required": ["schema_version", "image", "boxes"],
        "properties": {
            "schema_version": VERSION,
            "image": PAYLOAD,
            "boxes": {"type": "array", "minItems": 1, "items": BOX},
        },
    },
    CapabilityKind.CAPTION: {
        "required": ["schema_version", "image"],
        "properties": {"schema_version": VERSION, "image": PAYLOAD},
    },
    CapabilityKind.SCORE: {
        "required": ["schema_version", "image", "text"],
        "properties": {
            "schema_version": VERSION,
            "image": PAYLOAD,
            "text": {"type": "string", "minLength": 1},
        },
    },
}

REPLY_SCHEMAS = {
    CapabilityKind.CHAT: {
        "required": ["schema_version", "text"],
        "properties": {
            "schema_version": VERSION,
            "text": {"type": "string"},
            "finish_reason": {"type": "string", "minLength": 1},
        },
    },
    CapabilityKind.TEXT_TO_IMAGE: {
        "required": ["schema_version", "images"],
        "properties": {
            "schema_version": VERSION,
            "images": {"type": "array", "minItems": 1, "items": PAYLOAD},
        },
    },
    CapabilityKind.INSTRUCT_EDIT: {
        "required": ["schema_version", "image"],
        "properties": {"schema_version": VERSION, "image": PAYLOAD},
    },
    CapabilityKind.REGION_INPAINT: {
        "required": ["schema_version", "image"],
        "properties": {"schema_version": VERSION, "image": PAYLOAD},
    },
    CapabilityKind.DETECT: {
        "required": ["schema_version", "objects"],
        "properties": {
            "schema_version": VERSION,
            "objects": {"type": "array", "items": DETECTED_OBJECT},
        },
    },
    CapabilityKind.SEGMENT: {
        "required": ["schema_version", "masks"],
        "properties": {
            "schema_version": VERSION,
            "masks": {"type": "array", "items": SEGMENT_MASK},
        },
    },
    CapabilityKind.CAPTION: {
        "required": ["schema_version", "caption"],
        "properties": {
            "schema_version": VERSION,
            "caption": {"type": "string", "minLength": 1},
        },
    },
    CapabilityKind.SCORE: {
        "required": ["schema_version", "score"],
        "properties": {
            "schema_version": VERSION,
            "score": {"type": "number", "minimum": -1, "maximum": 1},
        },
    },
}

GOLDEN_PROMPT = "a red panda beside a fence in a desert dune"
GOLDEN_SEED = 7
WORLD_SEED = 0


def golden_requests():
    """The fixed request set, all image-bearing ones sharing one mock image.

    Returns (base_image, {kind: request}). The base image is the mock world's
    text_to_image output for GOLDEN_PROMPT at GOLDEN_SEED, so labeling
    capabilities have real registry content to answer about.
    """
    world = make_mock_world(WORLD_SEED)
    gen_request = GenRequest(
        prompt=GOLDEN_PROMPT, canvas=Canvas(), seed=GOLDEN_SEED, count=1
    )
    base = world.invoke(CapabilityKind.TEXT_TO_IMAGE, gen_request).images[0]
    requests = {
        CapabilityKind.CHAT: ChatRequest(render_visual_descriptor(LabelWord("red panda"))),
        CapabilityKind.TEXT_TO_IMAGE: gen_request,
        CapabilityKind.INSTRUCT_EDIT: EditRequest(
            image=base, instruction="change the background to snowy mountain", seed=3
        ),
        CapabilityKind.REGION_INPAINT: InpaintRequest(
            image=base, box=Box(200.0, 50.0, 300.0, 150.0), label="rocks", seed=5
        ),
        CapabilityKind.DETECT: DetectRequest(image=base, labels=("red panda", "fence")),
        CapabilityKind.SEGMENT: SegmentRequest(
            image=base, boxes=(Box(10.0, 10.0, 96.0, 96.0), Box(100.0, 120.0, 220.0, 260.0))
        ),
        CapabilityKind.CAPTION: CaptionRequest(image=base),
        CapabilityKind.SCORE: ScoreRequest(image=base, text=GOLDEN_PROMPT),
    }
    return world, requests


def _write(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", "utf-8")


def main() -> None:
    for kind in CapabilityKind:
        request_schema = {
            "$schema": "https://json-schema.org/draft/2020-12/schema",
            "$id": f"https://synthpipe.invalid/conformance/{kind.value}.request.schema.json",
            "title": f"{kind.value} request",
            "description": f"POST body for {ROUTES[kind]}",
            "type": "object",
            "additionalProperties": False,
            **REQUEST_SCHEMAS[kind],
        }
        reply_schema = {
            "$schema": "https://json-schema.org/draft/2020-12/schema",
            "$id": f"https://synthpipe.invalid/conformance/{kind.value}.reply.schema.json",
            "title": f"{kind.value} reply",
            "description": f"200 response body for {ROUTES[kind]}",
            "type": "object",
            "additionalProperties": False,
            **REPLY_SCHEMAS[kind],
        }
        _write(ROOT / "schemas" / f"{kind.value}.request.schema.json", request_schema)
        _write(ROOT / "schemas" / f"{kind.value}.reply.schema.json", reply_schema)

    world, requests = golden_requests()
    for kind, request in requests.items():
        _write(ROOT / "goldens" / f"{kind.value}.request.json", request_to_wire(request))
        reply = world.invoke(kind, request)
        _write(ROOT / "goldens" / f"{kind.value}.reply.json", reply_to_wire(reply))
    print(f"wrote schemas and goldens under {ROOT}")


if __name__ == "__main__":
    main()
