"""Slow, obvious reference implementations used to cross-check the fast paths.

Everything here favors clarity over speed: scalar loops, direct 2-D window
sweeps, independent re-derivations of filtering decisions. Tests compare the
library against these within tight tolerances, so a shared bug would have to
be written twice in two different shapes to slip through.
"""

import math

import numpy as np

from synthpipe.core import Box
from synthpipe.geometry import BoxRules


# Pixel metrics


def loop_mse(a, b) -> float:
    """Mean squared error via a flat scalar loop."""
    xs = np.asarray(a, dtype=np.float64).ravel().tolist()
    ys = np.asarray(b, dtype=np.float64).ravel().tolist()
    assert len(xs) == len(ys)
    total = 0.0
    for x, y in zip(xs, ys):
        d = x - y
        total += d * d
    return total / len(xs)


def loop_psnr(a, b, bit_depth_max: float = 255.0) -> float:
    err = loop_mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(bit_depth_max * bit_depth_max / err)


def loop_luma(image) -> np.ndarray:
    """BT.601 luma computed pixel by pixel."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr.copy()
    if arr.ndim == 3 and arr.shape[2] == 1:
        return arr[:, :, 0].copy()
    height, width, _ = arr.shape
    out = np.zeros((height, width), dtype=np.float64)
    for i in range(height):
        for j in range(width):
            r, g, b = arr[i, j, 0], arr[i, j, 1], arr[i, j, 2]
            out[i, j] = 0.299 * r + 0.587 * g + 0.114 * b
    return out


def window_ssim(
    a,
    b,
    window: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    bit_depth_max: float = 255.0,
) -> float:
    """SSIM by sliding a full 2-D Gaussian window over every valid position.

    No separability tricks and no convolution library: each window's weighted
    mean, variance, and covariance are computed directly from its pixels.
    """
    x = loop_luma(a)
    y = loop_luma(b)
    assert x.shape == y.shape
    height, width = x.shape
    assert height >= window and width >= window

    half = (window - 1) / 2.0
    line = [math.exp(-((i - half) ** 2) / (2.0 * sigma * sigma)) for i in range(window)]
    norm = sum(line)
    line = [v / norm for v in line]
    weights = np.array([[line[i] * line[j] for j in range(window)] for i in range(window)])

    c1 = (k1 * bit_depth_max) ** 2
    c2 = (k2 * bit_depth_max) ** 2

    values = []
    for top in range(height - window + 1):
        for left in range(width - window + 1):
            wx = x[top : top + window, left : left + window]
            wy = y[top : top + window, left : left + window]
            mu_x = float(np.sum(weights * wx))
            mu_y = float(np.sum(weights * wy))
            var_x = float(np.sum(weights * wx * wx)) - mu_x * mu_x
            var_y = float(np.sum(weights * wy * wy)) - mu_y * mu_y
            cov = float(np.sum(weights * wx * wy)) - mu_x * mu_y
            values.append(
                ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
                / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
            )
    return sum(values) / len(values)


# Geometry


def interval_overlap(lo1: float, hi1: float, lo2: float, hi2: float) -> float:
    lo = lo1 if lo1 > lo2 else lo2
    hi = hi1 if hi1 < hi2 else hi2
    return hi - lo if hi > lo else 0.0


def oracle_iou(a: Box, b: Box) -> float:
    """IoU from 1-D interval overlaps and inclusion-exclusion."""
    inter = interval_overlap(a.x1, a.x2, b.x1, b.x2) * interval_overlap(
        a.y1, a.y2, b.y1, b.y2
    )
    if inter == 0.0:
        return 0.0
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    return inter / (area_a + area_b - inter)


def oracle_filter(candidates, existing, rules: BoxRules):
    """Independent re-derivation of the overlap filter's full output.

    Walks candidates in order, re-checking every size rule and every pairwise
    IoU from scratch. Returns (retained, [(candidate, reasons), ...]) shaped
    like the library result so tests can compare directly.
    """
    retained = []
    retained_indices = []
    rejected = []
    for index, candidate in enumerate(candidates):
        box = candidate.box
        w = box.x2 - box.x1
        h = box.y2 - box.y1
        reasons = []
        if w <= rules.min_side:
            reasons.append("width_too_small")
        elif w >= rules.max_side:
            reasons.append("width_too_large")
        if h <= rules.min_side:
            reasons.append("height_too_small")
        elif h >= rules.max_side:
            reasons.append("height_too_large")
        inside = (
            box.x1 >= 0
            and box.y1 >= 0
            and box.x2 <= rules.canvas.width
            and box.y2 <= rules.canvas.height
        )
        if not inside:
            reasons.append("outside_canvas")
        for j, other in enumerate(existing):
            if oracle_iou(box, other) > rules.iou_max:
                reasons.append(f"overlap_existing_{j}")
        for kept, kept_index in zip(retained, retained_indices):
            if oracle_iou(box, kept.box) > rules.iou_max:
                reasons.append(f"overlap_candidate_{kept_index}")
        if reasons:
            rejected.append((candidate, tuple(reasons)))
        else:
            retained.append(candidate)
            retained_indices.append(index)
    return retained, rejected


def random_box(rng, canvas_w: float = 512.0, canvas_h: float = 512.0) -> Box:
    """A random well-formed box inside the canvas; sizes span the rule range."""
    w = rng.uniform(10.0, min(340.0, canvas_w))
    h = rng.uniform(10.0, min(340.0, canvas_h))
    x1 = rng.uniform(0.0, canvas_w - w)
    y1 = rng.uniform(0.0, canvas_h - h)
    return Box(round(x1, 2), round(y1, 2), round(x1 + w, 2), round(y1 + h, 2))
