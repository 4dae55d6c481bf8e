"""Backend gateway: wire protocol, HTTP client with retries, and the mock world."""

from .client import (
    BackendEndpoint,
    BackendError,
    BackendKindMismatch,
    BackendProtocolError,
    BackendRequestError,
    BackendSet,
    BackendTimeout,
    CHAT_API_KEY_VAR,
    MOCK_SCHEME,
    ScriptedChatBackend,
    invoke,
)
from .mock import MockWorld, make_mock_world
from .protocol import (
    CapabilityKind,
    CaptionReply,
    CaptionRequest,
    ChatReply,
    ChatRequest,
    DetectReply,
    DetectRequest,
    EditReply,
    EditRequest,
    GenReply,
    GenRequest,
    ImagePayload,
    InpaintReply,
    InpaintRequest,
    ROUTES,
    SCHEMA_VERSION,
    ScoreReply,
    ScoreRequest,
    SegmentReply,
    SegmentRequest,
    WireFormatError,
    png_decode,
    png_encode,
    reply_from_wire,
    reply_to_wire,
    request_from_wire,
    request_kind,
    request_to_wire,
)

__all__ = [
    "BackendEndpoint",
    "BackendError",
    "BackendKindMismatch",
    "BackendProtocolError",
    "BackendRequestError",
    "BackendSet",
    "BackendTimeout",
    "CHAT_API_KEY_VAR",
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
    "MOCK_SCHEME",
    "MockWorld",
    "ROUTES",
    "SCHEMA_VERSION",
    "ScoreReply",
    "ScoreRequest",
    "ScriptedChatBackend",
    "SegmentReply",
    "SegmentRequest",
    "WireFormatError",
    "invoke",
    "make_mock_world",
    "png_decode",
    "png_encode",
    "reply_from_wire",
    "reply_to_wire",
    "request_from_wire",
    "request_kind",
    "request_to_wire",
]
