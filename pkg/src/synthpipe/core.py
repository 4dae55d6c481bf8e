"""Shared domain types for the synthetic dataset pipeline.

Everything downstream (prompt rendering, backend calls, gating, storage)
passes these values around, so validation lives here at construction time
rather than being re-checked at every call site.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AnnotationBundle",
    "Box",
    "BoxCandidate",
    "Canvas",
    "DatasetRecord",
    "DetectedObject",
    "ImageRef",
    "LabelWord",
    "LineageStep",
    "QualityReport",
    "SceneSpec",
    "SegmentMask",
    "VisualFeature",
    "content_hash",
    "derive_seed",
    "rle_decode",
    "rle_encode",
]

LINEAGE_OPS = ("init", "background-edit", "object-fill")
REJECT_REASONS = ("psnr_below", "ssim_below", "object_missing", "semantic_below")


def content_hash(data: bytes) -> str:
    """SHA-256 hex digest of a byte payload. Empty payloads are a bug upstream."""
    if not data:
        raise ValueError("refusing to hash empty payload")
    return hashlib.sha256(data).hexdigest()


def derive_seed(*parts: object) -> int:
    """Fold run seed, stage name, and indices into a stable 63-bit seed.

    Keeps per-call randomness reproducible without threading RNG state
    through the pipeline.
    """
    material = ":".join(str(part) for part in parts).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class LabelWord:
    """The single target word (or short phrase) a run is built around."""

    text: str

    def __post_init__(self) -> None:
        if "\n" in self.text or "\r" in self.text:
            raise ValueError("label word must not contain newlines")
        trimmed = self.text.strip()
        if not trimmed:
            raise ValueError("label word must be non-empty")
        object.__setattr__(self, "text", trimmed)


@dataclass(frozen=True)
class VisualFeature:
    """Fine-grained visual phrases describing a label, e.g. 'long, bushy tail'."""

    phrases: tuple[str, ...]

    def __post_init__(self) -> None:
        cleaned = tuple(p.strip() for p in self.phrases)
        if any(not p for p in cleaned):
            raise ValueError("visual feature phrases must be non-empty")
        object.__setattr__(self, "phrases", cleaned)


@dataclass(frozen=True)
class Canvas:
    width: int = 512
    height: int = 512

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("canvas dimensions must be positive")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in pixel coordinates, corners ordered and finite."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError("box coordinates must be finite")
        if self.x1 >= self.x2 or self.y1 >= self.y2:
            raise ValueError("box corners must satisfy x1 < x2 and y1 < y2")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def to_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @classmethod
    def from_list(cls, coords) -> "Box":
        vals = [float(c) for c in coords]
        if len(vals) != 4:
            raise ValueError("box requires exactly four coordinates")
        return cls(*vals)


@dataclass(frozen=True)
class DetectedObject:
    """One grounded detection: the queried label, its box, and a confidence."""

    label: str
    box: Box
    score: float

    def __post_init__(self) -> None:
        if not self.label.strip():
            raise ValueError("detection label must be non-empty")
        object.__setattr__(self, "label", self.label.strip())
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise ValueError("detection score must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"label": self.label, "box": self.box.to_list(), "score": self.score}

    @classmethod
    def from_dict(cls, data: dict) -> "DetectedObject":
        return cls(
            label=str(data["label"]),
            box=Box.from_list(data["box"]),
            score=float(data["score"]),
        )


def rle_encode(mask: np.ndarray) -> tuple[int, ...]:
    """Run-length encode a binary mask over row-major pixel order.

    Counts alternate zero-run / one-run starting with the zero run, so a mask
    beginning with a foreground pixel encodes a leading zero count.
    """
    flat = np.asarray(mask, dtype=bool).reshape(-1)
    if flat.size == 0:
        return ()
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return tuple(int(r) for r in runs)


def rle_decode(counts: tuple[int, ...], width: int, height: int) -> np.ndarray:
    total = sum(counts)
    if total != width * height:
        raise ValueError("run-length counts do not cover the mask area")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if run < 0:
            raise ValueError("run-length counts must be non-negative")
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(height, width)


@dataclass(frozen=True)
class SegmentMask:
    """Run-length mask tied by index to one box of an annotation bundle."""

    box_index: int
    counts: tuple[int, ...]
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.box_index < 0:
            raise ValueError("mask box_index must be non-negative")
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError("run-length counts must be non-negative")
        if sum(counts) != self.width * self.height:
            raise ValueError("run-length counts do not cover the mask area")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_array(cls, box_index: int, mask: np.ndarray) -> "SegmentMask":
        h, w = mask.shape
        return cls(box_index=box_index, counts=rle_encode(mask), width=w, height=h)

    def to_array(self) -> np.ndarray:
        return rle_decode(self.counts, self.width, self.height)

    def to_dict(self) -> dict:
        return {
            "box_index": self.box_index,
            "counts": list(self.counts),
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SegmentMask":
        return cls(
            box_index=int(data["box_index"]),
            counts=tuple(int(c) for c in data["counts"]),
            width=int(data["width"]),
            height=int(data["height"]),
        )


@dataclass(frozen=True)
class AnnotationBundle:
    """Caption plus aligned detections and masks for one image."""

    caption: str
    objects: tuple[DetectedObject, ...] = ()
    masks: tuple[SegmentMask, ...] = ()

    def __post_init__(self) -> None:
        for mask in self.masks:
            if mask.box_index >= len(self.objects):
                raise ValueError("mask box_index out of range for objects")

    def labels(self) -> tuple[str, ...]:
        return tuple(obj.label for obj in self.objects)

    def to_dict(self) -> dict:
        return {
            "caption": self.caption,
            "objects": [obj.to_dict() for obj in self.objects],
            "masks": [mask.to_dict() for mask in self.masks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotationBundle":
        return cls(
            caption=str(data["caption"]),
            objects=tuple(DetectedObject.from_dict(o) for o in data["objects"]),
            masks=tuple(SegmentMask.from_dict(m) for m in data["masks"]),
        )


@dataclass(frozen=True)
class SceneSpec:
    """One brainstormed scene: a short background phrase, its objects, a sentence."""

    background: str
    objects: tuple[str, ...]
    description: str

    def __post_init__(self) -> None:
        background = self.background.strip()
        if not background:
            raise ValueError("scene background must be non-empty")
        if len(background.split()) > 6:
            raise ValueError("scene background must be a word or short phrase (max 6 words)")
        objects = tuple(o.strip() for o in self.objects)
        if not objects or any(not o for o in objects):
            raise ValueError("scene objects must be a non-empty list of non-empty labels")
        if not self.description.strip():
            raise ValueError("scene description must be non-empty")
        object.__setattr__(self, "background", background)
        object.__setattr__(self, "objects", objects)


@dataclass(frozen=True)
class BoxCandidate:
    """A proposed placement for a new object, before geometry filtering."""

    label: str
    box: Box
    relationship: str = ""

    def __post_init__(self) -> None:
        if not self.label.strip():
            raise ValueError("candidate label must be non-empty")
        object.__setattr__(self, "label", self.label.strip())

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "box": self.box.to_list(),
            "relationship": self.relationship,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoxCandidate":
        return cls(
            label=str(data["label"]),
            box=Box.from_list(data["box"]),
            relationship=str(data.get("relationship", "")),
        )


@dataclass(frozen=True)
class ImageRef:
    """Reference to an image by pixel-content hash; storage_path is an opaque locator."""

    id: str
    width: int
    height: int
    storage_path: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("image id must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "width": self.width,
            "height": self.height,
            "storage_path": self.storage_path,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ImageRef":
        return cls(
            id=str(data["id"]),
            width=int(data["width"]),
            height=int(data["height"]),
            storage_path=str(data.get("storage_path", "")),
        )


@dataclass(frozen=True)
class QualityReport:
    """Outcome of the filtering rules for one image.

    psnr/ssim are None when the pixel check did not apply (fresh generations
    have no edit source to compare against). psnr may be +inf for identical
    pixels; serialization spells that as the string "Infinity".
    """

    psnr: float | None
    ssim: float | None
    semantic_score: float | None
    required_labels: tuple[str, ...]
    found_labels: tuple[str, ...]
    verdict: str
    reasons: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.verdict not in ("retain", "reject"):
            raise ValueError("verdict must be 'retain' or 'reject'")
        if (self.verdict == "retain") != (len(self.reasons) == 0):
            raise ValueError("verdict must be retain exactly when reasons is empty")

    def to_dict(self) -> dict:
        psnr: object
        if self.psnr is None:
            psnr = None
        elif math.isinf(self.psnr):
            psnr = "Infinity"
        else:
            psnr = self.psnr
        return {
            "psnr": psnr,
            "ssim": self.ssim,
            "semantic_score": self.semantic_score,
            "required_labels": list(self.required_labels),
            "found_labels": list(self.found_labels),
            "verdict": self.verdict,
            "reasons": list(self.reasons),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QualityReport":
        psnr = data["psnr"]
        if psnr == "Infinity":
            psnr = math.inf
        return cls(
            psnr=None if psnr is None else float(psnr),
            ssim=None if data["ssim"] is None else float(data["ssim"]),
            semantic_score=(
                None if data["semantic_score"] is None else float(data["semantic_score"])
            ),
            required_labels=tuple(str(s) for s in data["required_labels"]),
            found_labels=tuple(str(s) for s in data["found_labels"]),
            verdict=str(data["verdict"]),
            reasons=tuple(str(r) for r in data["reasons"]),
        )


@dataclass(frozen=True)
class LineageStep:
    """One backend operation in an image's derivation chain."""

    op: str
    params: dict = field(default_factory=dict)
    image_id: str = ""

    def __post_init__(self) -> None:
        if self.op not in LINEAGE_OPS:
            raise ValueError(f"unknown lineage op {self.op!r}")
        if not self.image_id:
            raise ValueError("lineage step must record its resulting image id")

    def to_dict(self) -> dict:
        return {"op": self.op, "params": dict(self.params), "image_id": self.image_id}

    @classmethod
    def from_dict(cls, data: dict) -> "LineageStep":
        return cls(
            op=str(data["op"]),
            params=dict(data["params"]),
            image_id=str(data["image_id"]),
        )


@dataclass(frozen=True)
class DatasetRecord:
    """A stored image together with its annotations, derivation, and gate outcome."""

    image: ImageRef
    annotations: AnnotationBundle
    lineage: tuple[LineageStep, ...]
    quality: QualityReport

    def __post_init__(self) -> None:
        if not self.lineage:
            raise ValueError("record lineage must be non-empty")
        if self.lineage[0].op != "init":
            raise ValueError("record lineage must start with an init step")
        if self.lineage[-1].image_id != self.image.id:
            raise ValueError("final lineage step must produce the record image")

    def to_dict(self) -> dict:
        return {
            "image": self.image.to_dict(),
            "annotations": self.annotations.to_dict(),
            "lineage": [step.to_dict() for step in self.lineage],
            "quality": self.quality.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetRecord":
        return cls(
            image=ImageRef.from_dict(data["image"]),
            annotations=AnnotationBundle.from_dict(data["annotations"]),
            lineage=tuple(LineageStep.from_dict(s) for s in data["lineage"]),
            quality=QualityReport.from_dict(data["quality"]),
        )
