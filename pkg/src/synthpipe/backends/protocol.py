"""Wire protocol shared by every backend capability.

All capabilities speak JSON over one POST route each. Bodies carry a
schema_version field, images travel inline as base64 PNG, and the
request/reply dataclasses here are the only types the orchestrator sees;
whether a backend is an in-process mock or a remote HTTP service is invisible
above this layer.
"""

from __future__ import annotations

import base64
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ..core import Box, Canvas, DetectedObject, ImageRef, SegmentMask, content_hash
from ..prompts.render import PromptMessage, PromptRequest

__all__ = [
    "CapabilityKind",
    "CaptionReply",
    "CaptionRequest",
    "ChatReply",
    "ChatRequest",
    "DetectReply",
    "DetectRequest",
    "EditReply",
    "EditRequest",
    "GenReply",
    "GenRequest",
    "ImagePayload",
    "InpaintReply",
    "InpaintRequest",
    "ROUTES",
    "SCHEMA_VERSION",
    "ScoreReply",
    "ScoreRequest",
    "SegmentReply",
    "SegmentRequest",
    "WireFormatError",
    "png_encode",
    "png_decode",
    "reply_from_wire",
    "reply_to_wire",
    "request_from_wire",
    "request_kind",
    "request_to_wire",
]

SCHEMA_VERSION = "1"


class CapabilityKind(str, enum.Enum):
    CHAT = "chat"
    TEXT_TO_IMAGE = "text_to_image"
    INSTRUCT_EDIT = "instruct_edit"
    REGION_INPAINT = "region_inpaint"
    DETECT = "detect"
    SEGMENT = "segment"
    CAPTION = "caption"
    SCORE = "score"


ROUTES = {
    CapabilityKind.CHAT: "/v1/chat",
    CapabilityKind.TEXT_TO_IMAGE: "/v1/txt2img",
    CapabilityKind.INSTRUCT_EDIT: "/v1/edit",
    CapabilityKind.REGION_INPAINT: "/v1/inpaint",
    CapabilityKind.DETECT: "/v1/detect",
    CapabilityKind.SEGMENT: "/v1/segment",
    CapabilityKind.CAPTION: "/v1/caption",
    CapabilityKind.SCORE: "/v1/score",
}


class WireFormatError(ValueError):
    """A wire body does not match the capability schema."""


def png_encode(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), "RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_decode(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class ImagePayload:
    """An image in transit: PNG bytes plus decoded pixels and a content ref.

    The ref id is the hash of the raw pixel buffer, not the PNG bytes, so the
    same picture keeps the same identity however it was encoded.
    """

    png: bytes
    pixels: np.ndarray = field(repr=False)
    ref: ImageRef

    @classmethod
    def from_pixels(cls, pixels: np.ndarray) -> "ImagePayload":
        arr = np.ascontiguousarray(pixels, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("image payloads must be HxWx3 uint8")
        ref = ImageRef(
            id=content_hash(arr.tobytes()),
            width=arr.shape[1],
            height=arr.shape[0],
        )
        return cls(png=png_encode(arr), pixels=arr, ref=ref)

    @classmethod
    def from_png(cls, data: bytes) -> "ImagePayload":
        arr = png_decode(data)
        ref = ImageRef(
            id=content_hash(arr.tobytes()),
            width=arr.shape[1],
            height=arr.shape[0],
        )
        return cls(png=data, pixels=arr, ref=ref)


# Requests


@dataclass(frozen=True)
class ChatRequest:
    prompt: PromptRequest


@dataclass(frozen=True)
class GenRequest:
    prompt: str
    canvas: Canvas
    seed: int
    count: int = 1

    def __post_init__(self) -> None:
        if not self.prompt.strip():
            raise ValueError("generation prompt must be non-empty")
        if self.count < 1:
            raise ValueError("generation count must be at least 1")


@dataclass(frozen=True)
class EditRequest:
    image: ImagePayload
    instruction: str
    seed: int

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("edit instruction must be non-empty")


@dataclass(frozen=True)
class InpaintRequest:
    image: ImagePayload
    box: Box
    label: str
    seed: int

    def __post_init__(self) -> None:
        if not self.label.strip():
            raise ValueError("inpaint label must be non-empty")


@dataclass(frozen=True)
class DetectRequest:
    image: ImagePayload
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.labels or any(not l.strip() for l in self.labels):
            raise ValueError("detect requires at least one non-empty query label")


@dataclass(frozen=True)
class SegmentRequest:
    image: ImagePayload
    boxes: tuple[Box, ...]

    def __post_init__(self) -> None:
        if not self.boxes:
            raise ValueError("segment requires at least one box")


@dataclass(frozen=True)
class CaptionRequest:
    image: ImagePayload


@dataclass(frozen=True)
class ScoreRequest:
    image: ImagePayload
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("score text must be non-empty")


# Replies


@dataclass(frozen=True)
class ChatReply:
    text: str
    finish_reason: str = "stop"

    def __post_init__(self) -> None:
        if not self.text and self.finish_reason == "stop":
            raise ValueError("empty chat reply must carry a non-normal finish reason")


@dataclass(frozen=True)
class GenReply:
    images: tuple[ImagePayload, ...]

    def __post_init__(self) -> None:
        if not self.images:
            raise ValueError("generation reply must carry at least one image")


@dataclass(frozen=True)
class EditReply:
    image: ImagePayload


@dataclass(frozen=True)
class InpaintReply:
    image: ImagePayload


@dataclass(frozen=True)
class DetectReply:
    objects: tuple[DetectedObject, ...]


@dataclass(frozen=True)
class SegmentReply:
    masks: tuple[SegmentMask, ...]


@dataclass(frozen=True)
class CaptionReply:
    caption: str

    def __post_init__(self) -> None:
        if not self.caption.strip():
            raise ValueError("caption reply must be non-empty")


@dataclass(frozen=True)
class ScoreReply:
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")
        if not -1.0 <= self.score <= 1.0:
            raise ValueError("score must lie in [-1, 1]")


_REQUEST_KINDS = {
    ChatRequest: CapabilityKind.CHAT,
    GenRequest: CapabilityKind.TEXT_TO_IMAGE,
    EditRequest: CapabilityKind.INSTRUCT_EDIT,
    InpaintRequest: CapabilityKind.REGION_INPAINT,
    DetectRequest: CapabilityKind.DETECT,
    SegmentRequest: CapabilityKind.SEGMENT,
    CaptionRequest: CapabilityKind.CAPTION,
    ScoreRequest: CapabilityKind.SCORE,
}


def request_kind(request) -> CapabilityKind:
    try:
        return _REQUEST_KINDS[type(request)]
    except KeyError:
        raise WireFormatError(f"unknown request type {type(request).__name__}") from None


def _payload_to_wire(payload: ImagePayload) -> dict:
    return {
        "png_base64": base64.b64encode(payload.png).decode("ascii"),
        "ref": payload.ref.to_dict(),
    }


def _payload_from_wire(data) -> ImagePayload:
    if not isinstance(data, dict) or "png_base64" not in data:
        raise WireFormatError("image payload must be an object with png_base64")
    try:
        raw = base64.b64decode(data["png_base64"], validate=True)
        return ImagePayload.from_png(raw)
    except Exception as exc:
        raise WireFormatError(f"undecodable image payload: {exc}") from exc


def _check_version(body: dict) -> None:
    if not isinstance(body, dict):
        raise WireFormatError("wire body must be a JSON object")
    version = body.get("schema_version")
    if version != SCHEMA_VERSION:
        raise WireFormatError(
            f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION!r}"
        )


def request_to_wire(request) -> dict:
    kind = request_kind(request)
    body: dict = {"schema_version": SCHEMA_VERSION}
    if kind is CapabilityKind.CHAT:
        body["messages"] = [
            {"role": m.role, "content": m.content} for m in request.prompt.messages
        ]
        body["temperature"] = request.prompt.temperature
    elif kind is CapabilityKind.TEXT_TO_IMAGE:
        body["prompt"] = request.prompt
        body["canvas"] = {"width": request.canvas.width, "height": request.canvas.height}
        body["seed"] = request.seed
        body["count"] = request.count
    elif kind is CapabilityKind.INSTRUCT_EDIT:
        body["image"] = _payload_to_wire(request.image)
        body["instruction"] = request.instruction
        body["seed"] = request.seed
    elif kind is CapabilityKind.REGION_INPAINT:
        body["image"] = _payload_to_wire(request.image)
        body["box"] = request.box.to_list()
        body["label"] = request.label
        body["seed"] = request.seed
    elif kind is CapabilityKind.DETECT:
        body["image"] = _payload_to_wire(request.image)
        body["labels"] = list(request.labels)
    elif kind is CapabilityKind.SEGMENT:
        body["image"] = _payload_to_wire(request.image)
        body["boxes"] = [box.to_list() for box in request.boxes]
    elif kind is CapabilityKind.CAPTION:
        body["image"] = _payload_to_wire(request.image)
    else:
        body["image"] = _payload_to_wire(request.image)
        body["text"] = request.text
    return body


def request_from_wire(kind: CapabilityKind, body: dict):
    _check_version(body)
    try:
        if kind is CapabilityKind.CHAT:
            messages = tuple(
                PromptMessage(str(m["role"]), str(m["content"])) for m in body["messages"]
            )
            return ChatRequest(
                PromptRequest(messages=messages, temperature=float(body.get("temperature", 0.0)))
            )
        if kind is CapabilityKind.TEXT_TO_IMAGE:
            canvas = body["canvas"]
            return GenRequest(
                prompt=str(body["prompt"]),
                canvas=Canvas(int(canvas["width"]), int(canvas["height"])),
                seed=int(body["seed"]),
                count=int(body.get("count", 1)),
            )
        if kind is CapabilityKind.INSTRUCT_EDIT:
            return EditRequest(
                image=_payload_from_wire(body["image"]),
                instruction=str(body["instruction"]),
                seed=int(body["seed"]),
            )
        if kind is CapabilityKind.REGION_INPAINT:
            return InpaintRequest(
                image=_payload_from_wire(body["image"]),
                box=Box.from_list(body["box"]),
                label=str(body["label"]),
                seed=int(body["seed"]),
            )
        if kind is CapabilityKind.DETECT:
            return DetectRequest(
                image=_payload_from_wire(body["image"]),
                labels=tuple(str(l) for l in body["labels"]),
            )
        if kind is CapabilityKind.SEGMENT:
            return SegmentRequest(
                image=_payload_from_wire(body["image"]),
                boxes=tuple(Box.from_list(b) for b in body["boxes"]),
            )
        if kind is CapabilityKind.CAPTION:
            return CaptionRequest(image=_payload_from_wire(body["image"]))
        if kind is CapabilityKind.SCORE:
            return ScoreRequest(
                image=_payload_from_wire(body["image"]),
                text=str(body["text"]),
            )
    except WireFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise WireFormatError(f"malformed {kind.value} request: {exc}") from exc
    raise WireFormatError(f"unknown capability {kind!r}")


def reply_to_wire(reply) -> dict:
    body: dict = {"schema_version": SCHEMA_VERSION}
    if isinstance(reply, ChatReply):
        body["text"] = reply.text
        body["finish_reason"] = reply.finish_reason
    elif isinstance(reply, GenReply):
        body["images"] = [_payload_to_wire(p) for p in reply.images]
    elif isinstance(reply, (EditReply, InpaintReply)):
        body["image"] = _payload_to_wire(reply.image)
    elif isinstance(reply, DetectReply):
        body["objects"] = [obj.to_dict() for obj in reply.objects]
    elif isinstance(reply, SegmentReply):
        body["masks"] = [mask.to_dict() for mask in reply.masks]
    elif isinstance(reply, CaptionReply):
        body["caption"] = reply.caption
    elif isinstance(reply, ScoreReply):
        body["score"] = reply.score
    else:
        raise WireFormatError(f"unknown reply type {type(reply).__name__}")
    return body


def _clamped_detection(data: dict) -> DetectedObject:
    # Detector logits land here; anything outside [0, 1] is clamped on entry.
    score = float(data["score"])
    score = min(1.0, max(0.0, score))
    return DetectedObject(label=str(data["label"]), box=Box.from_list(data["box"]), score=score)


def reply_from_wire(kind: CapabilityKind, body: dict):
    _check_version(body)
    try:
        if kind is CapabilityKind.CHAT:
            return ChatReply(
                text=str(body["text"]),
                finish_reason=str(body.get("finish_reason", "stop")),
            )
        if kind is CapabilityKind.TEXT_TO_IMAGE:
            return GenReply(images=tuple(_payload_from_wire(p) for p in body["images"]))
        if kind is CapabilityKind.INSTRUCT_EDIT:
            return EditReply(image=_payload_from_wire(body["image"]))
        if kind is CapabilityKind.REGION_INPAINT:
            return InpaintReply(image=_payload_from_wire(body["image"]))
        if kind is CapabilityKind.DETECT:
            return DetectReply(objects=tuple(_clamped_detection(o) for o in body["objects"]))
        if kind is CapabilityKind.SEGMENT:
            return SegmentReply(masks=tuple(SegmentMask.from_dict(m) for m in body["masks"]))
        if kind is CapabilityKind.CAPTION:
            return CaptionReply(caption=str(body["caption"]))
        if kind is CapabilityKind.SCORE:
            return ScoreReply(score=float(body["score"]))
    except WireFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise WireFormatError(f"malformed {kind.value} reply: {exc}") from exc
    raise WireFormatError(f"unknown capability {kind!r}")
