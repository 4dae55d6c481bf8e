"""Box validation, IoU, and overlap filtering for proposed object placements.

Placement proposals come back from a language model, so nothing here trusts
its input: every candidate is checked against size rules, canvas bounds, and
overlap caps before an inpainting call is allowed to happen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Box, BoxCandidate, Canvas

__all__ = [
    "BoxRules",
    "RejectedCandidate",
    "filter_overlapping",
    "iou",
    "validate_box",
]


@dataclass(frozen=True)
class BoxRules:
    """Size and overlap limits for new object boxes.

    Side limits are strict: a 75-pixel or 300-pixel side is rejected. Boxes
    exactly on the canvas edge are inside (closed boundary).
    """

    min_side: float = 75.0
    max_side: float = 300.0
    canvas: Canvas = field(default_factory=Canvas)
    iou_max: float = 0.30

    def __post_init__(self) -> None:
        if not 0 < self.min_side < self.max_side:
            raise ValueError("box rules require 0 < min_side < max_side")
        if self.max_side > min(self.canvas.width, self.canvas.height):
            raise ValueError("max_side must fit inside the canvas")
        if not 0.0 <= self.iou_max <= 1.0:
            raise ValueError("iou_max must lie in [0, 1]")


def validate_box(box: Box, rules: BoxRules) -> tuple[str, ...]:
    """Check one box against the rules; returns violation ids, empty when ok."""
    violations = []
    if box.width <= rules.min_side:
        violations.append("width_too_small")
    elif box.width >= rules.max_side:
        violations.append("width_too_large")
    if box.height <= rules.min_side:
        violations.append("height_too_small")
    elif box.height >= rules.max_side:
        violations.append("height_too_large")
    if (
        box.x1 < 0
        or box.y1 < 0
        or box.x2 > rules.canvas.width
        or box.y2 > rules.canvas.height
    ):
        violations.append("outside_canvas")
    return tuple(violations)


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; disjoint boxes score 0."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class RejectedCandidate:
    """A dropped proposal plus every rule or conflicting box that sank it."""

    candidate: BoxCandidate
    reasons: tuple[str, ...]


def filter_overlapping(
    candidates: Sequence[BoxCandidate],
    existing: Iterable[Box],
    rules: BoxRules,
) -> tuple[list[BoxCandidate], list[RejectedCandidate]]:
    """Keep candidates that pass size rules and overlap caps, first come first kept.

    A candidate is checked against every existing box and every candidate
    already retained in this call; its rejection reasons list all failures,
    not just the first one.
    """
    existing_boxes = list(existing)
    retained: list[BoxCandidate] = []
    retained_indices: list[int] = []
    rejected: list[RejectedCandidate] = []
    for index, candidate in enumerate(candidates):
        reasons = list(validate_box(candidate.box, rules))
        for j, other in enumerate(existing_boxes):
            if iou(candidate.box, other) > rules.iou_max:
                reasons.append(f"overlap_existing_{j}")
        for kept, kept_index in zip(retained, retained_indices):
            if iou(candidate.box, kept.box) > rules.iou_max:
                reasons.append(f"overlap_candidate_{kept_index}")
        if reasons:
            rejected.append(RejectedCandidate(candidate, tuple(reasons)))
        else:
            retained.append(candidate)
            retained_indices.append(index)
    return retained, rejected
