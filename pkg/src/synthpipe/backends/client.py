"""Backend invocation: endpoint config, HTTP transport, retries, mock dispatch.

Retry policy: transient transport failures (connection errors, timeouts, 5xx)
are retried up to max_retries with exponential backoff, base 0.5 s doubling
per attempt and no jitter. 4xx responses mean the request itself is bad and
are never retried.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Mapping

import requests

from .protocol import (
    CapabilityKind,
    ROUTES,
    SegmentReply,
    WireFormatError,
    reply_from_wire,
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
    "MOCK_SCHEME",
    "ScriptedChatBackend",
    "invoke",
]

MOCK_SCHEME = "mock:"
CHAT_API_KEY_VAR = "SYNTHPIPE_CHAT_API_KEY"
BACKOFF_BASE = 0.5
BACKOFF_FACTOR = 2.0


class BackendError(Exception):
    """Base class for everything that can go wrong talking to a backend."""


class BackendKindMismatch(BackendError):
    """Request type does not match the endpoint's capability."""


class BackendTimeout(BackendError):
    """Transport kept failing after the retry budget was spent."""


class BackendRequestError(BackendError):
    """The backend rejected the request as malformed; retrying won't help."""


class BackendProtocolError(BackendError):
    """The backend answered with something that violates the wire schema."""


@dataclass(frozen=True)
class BackendEndpoint:
    """Where one capability lives and how patient to be with it."""

    kind: CapabilityKind
    base_url: str
    timeout: float = 30.0
    max_retries: int = 2

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("endpoint base_url must be non-empty")
        if self.timeout <= 0:
            raise ValueError("endpoint timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("endpoint max_retries must be non-negative")

    @property
    def is_mock(self) -> bool:
        return self.base_url.startswith(MOCK_SCHEME)


def _check_reply(request, reply) -> None:
    kind = request_kind(request)
    if kind is CapabilityKind.SEGMENT:
        assert isinstance(reply, SegmentReply)
        if len(reply.masks) != len(request.boxes):
            raise BackendProtocolError(
                f"segment reply returned {len(reply.masks)} masks for "
                f"{len(request.boxes)} boxes"
            )
    if kind is CapabilityKind.TEXT_TO_IMAGE:
        for payload in reply.images:
            if (payload.ref.width, payload.ref.height) != (
                request.canvas.width,
                request.canvas.height,
            ):
                raise BackendProtocolError("generated image does not match requested canvas")
    if kind in (CapabilityKind.INSTRUCT_EDIT, CapabilityKind.REGION_INPAINT):
        if (reply.image.ref.width, reply.image.ref.height) != (
            request.image.ref.width,
            request.image.ref.height,
        ):
            raise BackendProtocolError("edited image does not match the source canvas")


def _http_invoke(endpoint: BackendEndpoint, request, session=None):
    kind = endpoint.kind
    url = endpoint.base_url.rstrip("/") + ROUTES[kind]
    body = request_to_wire(request)
    headers = {}
    if kind is CapabilityKind.CHAT:
        api_key = os.environ.get(CHAT_API_KEY_VAR)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
    transport = session if session is not None else requests
    attempt = 0
    while True:
        failure: str | None = None
        try:
            response = transport.post(url, json=body, headers=headers, timeout=endpoint.timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            failure = f"transport failure: {exc}"
        else:
            if response.status_code == 200:
                try:
                    return reply_from_wire(kind, response.json())
                except (ValueError, WireFormatError) as exc:
                    raise BackendProtocolError(f"{kind.value} reply rejected: {exc}") from exc
            if 400 <= response.status_code < 500:
                raise BackendRequestError(
                    f"{kind.value} request rejected with HTTP {response.status_code}: "
                    f"{response.text[:200]}"
                )
            failure = f"HTTP {response.status_code}"
        if attempt >= endpoint.max_retries:
            raise BackendTimeout(
                f"{kind.value} backend at {endpoint.base_url} failed after "
                f"{attempt + 1} attempts ({failure})"
            )
        time.sleep(BACKOFF_BASE * BACKOFF_FACTOR**attempt)
        attempt += 1


def invoke(endpoint: BackendEndpoint, request, *, world=None, session=None):
    """Send one request to the endpoint and return its typed reply.

    Mock endpoints need the owning mock world passed in; HTTP endpoints go
    through requests with the retry policy above. Replies are checked against
    the request (canvas dimensions, mask alignment) before being returned.
    """
    kind = request_kind(request)
    if kind != endpoint.kind:
        raise BackendKindMismatch(
            f"{type(request).__name__} sent to a {endpoint.kind.value} endpoint"
        )
    if endpoint.is_mock:
        if world is None:
            raise BackendError("mock endpoint requires a mock world instance")
        reply = world.invoke(kind, request)
    else:
        reply = _http_invoke(endpoint, request, session=session)
    _check_reply(request, reply)
    return reply


class ScriptedChatBackend:
    """Chat backend that replays a fixed list of replies, for tests and demos."""

    def __init__(self, replies):
        self._replies = list(replies)
        self.requests: list = []

    def invoke(self, kind: CapabilityKind, request):
        from .protocol import ChatReply

        if kind is not CapabilityKind.CHAT:
            raise BackendKindMismatch("scripted backend only answers chat requests")
        self.requests.append(request)
        if not self._replies:
            raise BackendError("scripted chat backend ran out of replies")
        return ChatReply(text=self._replies.pop(0))


class BackendSet:
    """Per-capability invokers for one pipeline run.

    Endpoints using the mock: scheme share a single world instance so that
    generated images stay visible to the labeling capabilities. Tests can
    override individual capabilities with any object exposing
    invoke(kind, request).
    """

    def __init__(
        self,
        endpoints: Mapping[CapabilityKind, BackendEndpoint],
        world=None,
        overrides: Mapping[CapabilityKind, object] | None = None,
        session=None,
    ):
        self.endpoints = dict(endpoints)
        self.world = world
        self.overrides = dict(overrides or {})
        self._session = session
        for kind, endpoint in self.endpoints.items():
            if endpoint.kind != kind:
                raise ValueError(f"endpoint for {kind.value} is configured as {endpoint.kind.value}")
        missing = [
            kind for kind, ep in self.endpoints.items() if ep.is_mock and kind not in self.overrides
        ]
        if missing and world is None:
            raise ValueError("mock endpoints configured without a mock world")

    @classmethod
    def from_endpoints(
        cls,
        endpoints: Mapping[CapabilityKind, BackendEndpoint],
        seed: int,
        overrides: Mapping[CapabilityKind, object] | None = None,
    ) -> "BackendSet":
        from .mock import make_mock_world

        world = None
        overrides = dict(overrides or {})
        if any(ep.is_mock and kind not in overrides for kind, ep in endpoints.items()):
            world = make_mock_world(seed)
        return cls(endpoints, world=world, overrides=overrides)

    def require(self, kinds) -> None:
        missing = [k.value for k in kinds if k not in self.endpoints and k not in self.overrides]
        if missing:
            raise ValueError(f"no endpoint configured for: {', '.join(sorted(missing))}")

    def invoke(self, request):
        kind = request_kind(request)
        override = self.overrides.get(kind)
        if override is not None:
            reply = override.invoke(kind, request)
            _check_reply(request, reply)
            return reply
        endpoint = self.endpoints.get(kind)
        if endpoint is None:
            raise BackendError(f"no endpoint configured for capability {kind.value}")
        return invoke(endpoint, request, world=self.world, session=self._session)
