"""Filtering rules that decide whether a generated image enters the dataset.

Two rule families: pixel checking (PSNR/SSIM of an edit against its source,
so an edit that trashed the whole frame is caught) and semantic checking
(similarity ranking of candidates plus re-detection of the objects the image
is supposed to contain). A decision never short-circuits; every applicable
rule runs and every failure is listed, so a rejection explains itself fully.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DetectedObject, QualityReport
from .metrics import MetricParams, psnr, ssim

__all__ = [
    "GateThresholds",
    "QualityReport",
    "filter_decision",
    "object_presence_check",
    "pixel_check",
    "semantic_rank",
]


@dataclass(frozen=True)
class GateThresholds:
    """Retention thresholds; semantic_min stays off unless explicitly set."""

    psnr_min: float = 20.0
    ssim_min: float = 0.75
    sim_top_k: int = 1
    detect_conf_min: float = 0.35
    semantic_min: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.psnr_min):
            raise ValueError("psnr_min must be finite")
        if not 0.0 <= self.ssim_min <= 1.0:
            raise ValueError("ssim_min must lie in [0, 1]")
        if self.sim_top_k < 1:
            raise ValueError("sim_top_k must be at least 1")
        if not 0.0 <= self.detect_conf_min <= 1.0:
            raise ValueError("detect_conf_min must lie in [0, 1]")
        if self.semantic_min is not None and not math.isfinite(self.semantic_min):
            raise ValueError("semantic_min must be finite when set")


def _verdict(reasons: Sequence[str]) -> str:
    return "reject" if reasons else "retain"


def pixel_check(
    original: np.ndarray,
    edited: np.ndarray,
    thresholds: GateThresholds = GateThresholds(),
    params: MetricParams = MetricParams(),
) -> QualityReport:
    """Compare an edit against its source image. Both metrics always run."""
    psnr_value = psnr(original, edited, params)
    ssim_value = ssim(original, edited, params)
    reasons = []
    if psnr_value < thresholds.psnr_min:
        reasons.append("psnr_below")
    if ssim_value < thresholds.ssim_min:
        reasons.append("ssim_below")
    return QualityReport(
        psnr=psnr_value,
        ssim=ssim_value,
        semantic_score=None,
        required_labels=(),
        found_labels=(),
        verdict=_verdict(reasons),
        reasons=tuple(reasons),
    )


def semantic_rank(candidates: Sequence, text: str, score_fn: Callable, top_k: int = 1):
    """Order candidates by similarity to the text, best first, ties by input order.

    score_fn(candidate, text) -> float. Returns (candidate, score) pairs for
    the top_k best candidates.
    """
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    scored = [(candidate, float(score_fn(candidate, text))) for candidate in candidates]
    ranked = sorted(enumerate(scored), key=lambda item: (-item[1][1], item[0]))
    return [pair for _, pair in ranked[:top_k]]


def _norm_label(label: str) -> str:
    return " ".join(label.casefold().split())


def object_presence_check(
    detections: Sequence[DetectedObject],
    required_labels: Sequence[str],
    thresholds: GateThresholds = GateThresholds(),
) -> QualityReport:
    """Verify every required label was re-detected above the confidence floor."""
    confident = {
        _norm_label(d.label) for d in detections if d.score >= thresholds.detect_conf_min
    }
    found = []
    missing = []
    for label in required_labels:
        if _norm_label(label) in confident:
            found.append(label)
        else:
            missing.append(label)
    reasons = ["object_missing"] if missing else []
    return QualityReport(
        psnr=None,
        ssim=None,
        semantic_score=None,
        required_labels=tuple(required_labels),
        found_labels=tuple(found),
        verdict=_verdict(reasons),
        reasons=tuple(reasons),
    )


def filter_decision(
    original: np.ndarray | None,
    edited_pixels: np.ndarray,
    detections: Sequence[DetectedObject],
    required_labels: Sequence[str],
    semantic_score: float | None,
    thresholds: GateThresholds = GateThresholds(),
    params: MetricParams = MetricParams(),
) -> QualityReport:
    """Combine every applicable rule into one report.

    original is None for fresh generations, which have no edit source; the
    pixel check then does not apply and psnr/ssim stay None. The semantic
    score is always recorded but only gates when semantic_min is configured.
    """
    reasons: list[str] = []
    psnr_value: float | None = None
    ssim_value: float | None = None
    if original is not None:
        pixel = pixel_check(original, edited_pixels, thresholds, params)
        psnr_value = pixel.psnr
        ssim_value = pixel.ssim
        reasons.extend(pixel.reasons)
    presence = object_presence_check(detections, required_labels, thresholds)
    reasons.extend(presence.reasons)
    if (
        semantic_score is not None
        and thresholds.semantic_min is not None
        and semantic_score < thresholds.semantic_min
    ):
        reasons.append("semantic_below")
    return QualityReport(
        psnr=psnr_value,
        ssim=ssim_value,
        semantic_score=semantic_score,
        required_labels=presence.required_labels,
        found_labels=presence.found_labels,
        verdict=_verdict(reasons),
        reasons=tuple(reasons),
    )
