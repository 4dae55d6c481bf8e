"""Pixel mechanics: PNG codecs, content ids, the scene tape, mask run-lengths.

The scene tape is how the reference models stay consistent with each other
across separate server processes without any shared state: the generator
writes a small machine-readable record (background tag plus object layout)
into the trailing bytes of the pixel buffer, and the labeling models read it
back out of the picture itself. PNG is lossless, so the tape survives the
wire. Images produced elsewhere simply have no tape and are treated as
unreadable scenes.

Tape layout, at the very end of the flattened HxWx3 buffer:

    [payload bytes][4-byte magic][2-byte big-endian payload length]
"""

from __future__ import annotations

import base64
import hashlib
import io

import numpy as np
from PIL import Image

from .wire import RequestError

__all__ = [
    "content_id",
    "decode_payload",
    "payload_to_wire",
    "png_decode",
    "png_encode",
    "read_tape",
    "rle_counts",
    "write_tape",
]

TAPE_MAGIC = b"SCN1"
_TAPE_OVERHEAD = len(TAPE_MAGIC) + 2


def png_encode(pixels: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an HxWx3 uint8 pixel array")
    buffer = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buffer, format="PNG")
    return buffer.getvalue()


def png_decode(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as image:
        return np.asarray(image.convert("RGB"), dtype=np.uint8)


def content_id(pixels: np.ndarray) -> str:
    """SHA-256 of the raw RGB buffer: identity survives re-encoding."""
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    return hashlib.sha256(arr.tobytes()).hexdigest()


def payload_to_wire(pixels: np.ndarray) -> dict:
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    return {
        "png_base64": base64.b64encode(png_encode(arr)).decode("ascii"),
        "ref": {
            "id": content_id(arr),
            "width": int(arr.shape[1]),
            "height": int(arr.shape[0]),
            "storage_path": "",
        },
    }


def decode_payload(payload: dict) -> np.ndarray:
    """Inline payload to pixels; the advisory ref is deliberately ignored."""
    try:
        raw = base64.b64decode(payload["png_base64"], validate=True)
        return png_decode(raw)
    except Exception as exc:
        raise RequestError(f"undecodable image payload: {exc}") from exc


def write_tape(pixels: np.ndarray, payload: bytes) -> bool:
    """Stamp payload into the buffer tail, in place. False when it won't fit."""
    flat = pixels.reshape(-1)
    total = len(payload) + _TAPE_OVERHEAD
    if len(payload) > 0xFFFF or total > flat.size:
        return False
    footer = TAPE_MAGIC + len(payload).to_bytes(2, "big")
    flat[-total:] = np.frombuffer(payload + footer, dtype=np.uint8)
    return True


def read_tape(pixels: np.ndarray) -> bytes | None:
    flat = np.ascontiguousarray(pixels, dtype=np.uint8).reshape(-1)
    if flat.size < _TAPE_OVERHEAD:
        return None
    footer = flat[-_TAPE_OVERHEAD:].tobytes()
    if footer[: len(TAPE_MAGIC)] != TAPE_MAGIC:
        return None
    length = int.from_bytes(footer[len(TAPE_MAGIC) :], "big")
    if length == 0 or length + _TAPE_OVERHEAD > flat.size:
        return None
    return flat[-(length + _TAPE_OVERHEAD) : -_TAPE_OVERHEAD].tobytes()


def rle_counts(mask: np.ndarray) -> list[int]:
    """Row-major run lengths alternating off/on, starting with an off run."""
    flat = np.asarray(mask, dtype=bool).reshape(-1)
    if flat.size == 0:
        return [0]
    edges = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], edges, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(run) for run in runs]
