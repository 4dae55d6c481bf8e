"""Model registry and the deterministic reference implementations.

One server process hosts exactly one capability backed by one model. Which
model is a config value: load_model looks the identifier up in a per
capability registry and fails loudly before any server socket exists, so a
typo in deployment config dies at startup instead of at first request.

The reference models need no weights and no accelerator. They exist so the
full generate / edit / annotate loop can be exercised over real HTTP with
nothing but CPU: generation paints flat-color scenes and embeds a scene tape
describing them; the labeling models answer from the tape. All of them are
pure functions of their inputs, and generation folds the request seed into a
hash-based RNG, so identical requests produce pixel-identical replies across
calls, processes, and machines.

The flat palette lives in a narrow band on purpose: a faithful background
swap then moves every channel by at most PALETTE_SPAN - 1, which keeps
honest edits comfortably above the downstream retention gate's PSNR floor
while still giving distinct tags distinct colors.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

import numpy as np

from .imaging import content_id, read_tape, write_tape
from .scene import (
    SceneTape,
    caption_sentence,
    content_tokens,
    instruction_background,
    labels_match,
    parse_prompt_scene,
)
from .wire import CAPABILITIES

__all__ = [
    "ModelLoadError",
    "ShimConfig",
    "available_models",
    "load_model",
    "register_model",
    "PALETTE_LOW",
    "PALETTE_SPAN",
    "color_for",
]

PALETTE_LOW = 118
PALETTE_SPAN = 21

REFERENCE_MODEL = "reference"


class ModelLoadError(Exception):
    """The configured model cannot be loaded; the server must not start."""


@dataclass(frozen=True)
class ShimConfig:
    """One serving assignment: capability, model identifier, device, port."""

    capability: str
    model: str = REFERENCE_MODEL
    device: str = "cpu"
    port: int = 8300

    def __post_init__(self) -> None:
        if self.capability not in CAPABILITIES:
            raise ValueError(
                f"unknown capability {self.capability!r}; "
                f"expected one of {', '.join(CAPABILITIES)}"
            )
        if not self.model:
            raise ValueError("model identifier must be non-empty")
        if not self.device:
            raise ValueError("device must be non-empty")
        if not 0 < self.port < 65536:
            raise ValueError("port must be in 1..65535")


_REGISTRY: dict[tuple[str, str], object] = {}


def register_model(capability: str, model_id: str):
    """Class decorator adding a model factory under (capability, model_id)."""

    def add(factory):
        if capability not in CAPABILITIES:
            raise ValueError(f"unknown capability {capability!r}")
        _REGISTRY[(capability, model_id)] = factory
        return factory

    return add


def available_models(capability: str) -> list[str]:
    return sorted(m for c, m in _REGISTRY if c == capability)


def load_model(config: ShimConfig):
    """Instantiate the configured model or raise ModelLoadError."""
    factory = _REGISTRY.get((config.capability, config.model))
    if factory is None:
        known = ", ".join(available_models(config.capability)) or "none"
        raise ModelLoadError(
            f"no model {config.model!r} for capability {config.capability!r} "
            f"(available: {known})"
        )
    try:
        return factory(config)
    except ModelLoadError:
        raise
    except Exception as exc:
        raise ModelLoadError(
            f"model {config.model!r} failed to load: {exc}"
        ) from exc


def _rng(*parts: object) -> random.Random:
    material = "\x1f".join(str(part) for part in parts).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def color_for(tag: str) -> tuple[int, int, int]:
    digest = hashlib.sha256(f"flat-palette:{tag}".encode("utf-8")).digest()
    return tuple(PALETTE_LOW + b % PALETTE_SPAN for b in digest[:3])


def _clip_box(box, width: int, height: int) -> tuple[int, int, int, int] | None:
    x1 = max(0, int(np.floor(box[0])))
    y1 = max(0, int(np.floor(box[1])))
    x2 = min(width, int(np.ceil(box[2])))
    y2 = min(height, int(np.ceil(box[3])))
    if x2 <= x1 or y2 <= y1:
        return None
    return x1, y1, x2, y2


def _overlap(a, b) -> float:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    if w <= 0 or h <= 0:
        return 0.0
    area = (a[2] - a[0]) * (a[3] - a[1])
    return (w * h) / area if area else 0.0


def _layout(labels, width: int, height: int, rng: random.Random):
    """Deterministic object placement: mid-sized boxes, low mutual overlap."""

    def side(extent: int) -> int:
        lo = max(1, min(90, int(extent * 0.2)))
        hi = max(lo, min(240, int(extent * 0.45)))
        return rng.randint(lo, hi)

    placed: list[tuple[str, tuple[float, float, float, float]]] = []
    taken: list[tuple[float, float, float, float]] = []
    for label in labels:
        best = None
        for _ in range(24):
            w = side(width)
            h = side(height)
            x1 = float(rng.randint(0, max(0, width - w)))
            y1 = float(rng.randint(0, max(0, height - h)))
            box = (x1, y1, x1 + w, y1 + h)
            worst = max((_overlap(box, other) for other in taken), default=0.0)
            if best is None or worst < best[0]:
                best = (worst, box)
            if worst <= 0.05:
                break
        _, box = best
        placed.append((label, box))
        taken.append(box)
    return placed


def _render(tape: SceneTape, width: int, height: int) -> np.ndarray:
    """Paint the scene flat, then stamp the tape over the trailing bytes."""
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = color_for(tape.background)
    for label, box in tape.objects:
        clipped = _clip_box(box, width, height)
        if clipped:
            x1, y1, x2, y2 = clipped
            pixels[y1:y2, x1:x2] = color_for(label)
    write_tape(pixels, tape.to_bytes())
    return pixels


def _extract(pixels: np.ndarray) -> SceneTape | None:
    data = read_tape(pixels)
    return SceneTape.from_bytes(data) if data is not None else None


class _ReferenceBase:
    def __init__(self, config: ShimConfig):
        self.model_id = config.model
        self.device = config.device


@register_model("text_to_image", REFERENCE_MODEL)
class ReferenceGenerator(_ReferenceBase):
    """Prompt to flat scene: location phrase becomes the background tag,
    content-word runs become objects placed at seeded positions."""

    capability = "text_to_image"

    def generate(self, prompt: str, width: int, height: int, seed: int, count: int):
        background, labels = parse_prompt_scene(prompt)
        images = []
        for index in range(count):
            rng = _rng("txt2img", prompt, seed, index)
            tape = SceneTape(background, _layout(labels, width, height, rng))
            images.append(_render(tape, width, height))
        return images


@register_model("instruct_edit", REFERENCE_MODEL)
class ReferenceEditor(_ReferenceBase):
    """Background swap: same objects, same boxes, new backdrop tag.

    Pixels are fully determined by image content and instruction, so the
    request seed changes nothing. Images without a tape are treated as empty
    scenes and repainted whole.
    """

    capability = "instruct_edit"

    def edit(self, pixels: np.ndarray, instruction: str, seed: int) -> np.ndarray:
        height, width = pixels.shape[:2]
        tape = _extract(pixels) or SceneTape("plain backdrop", [])
        tape.background = instruction_background(instruction)
        return _render(tape, width, height)


@register_model("region_inpaint", REFERENCE_MODEL)
class ReferenceInpainter(_ReferenceBase):
    """Fill one box with the label's color and append it to the scene tape;
    every pixel outside the box and the tape stays untouched."""

    capability = "region_inpaint"

    def inpaint(self, pixels: np.ndarray, box, label: str, seed: int) -> np.ndarray:
        height, width = pixels.shape[:2]
        out = np.array(pixels, dtype=np.uint8, copy=True)
        tape = _extract(pixels) or SceneTape("plain backdrop", [])
        clipped = _clip_box(box, width, height)
        if clipped:
            x1, y1, x2, y2 = clipped
            out[y1:y2, x1:x2] = color_for(label)
        tape.objects.append((label, tuple(float(c) for c in box)))
        write_tape(out, tape.to_bytes())
        return out


@register_model("detect", REFERENCE_MODEL)
class ReferenceDetector(_ReferenceBase):
    """Open-vocabulary grounding against the scene tape.

    Each query that token-matches an object yields that object's box with
    the query echoed back as the label; a query matching the background
    grounds to the full canvas. Scores are content-derived, deterministic,
    and sit above any sensible confidence floor.
    """

    capability = "detect"

    def detect(self, pixels: np.ndarray, labels) -> list[tuple[str, tuple, float]]:
        tape = _extract(pixels)
        if tape is None:
            return []
        height, width = pixels.shape[:2]
        image_id = content_id(pixels)
        found = []
        for query in labels:
            for label, box in tape.objects:
                if labels_match(query, label):
                    found.append((query, box, self._score(image_id, query)))
            if labels_match(query, tape.background):
                full = (0.0, 0.0, float(width), float(height))
                found.append((query, full, self._score(image_id, query)))
        return found

    @staticmethod
    def _score(image_id: str, query: str) -> float:
        digest = hashlib.sha256(f"det:{image_id}:{query.casefold()}".encode()).digest()
        return round(0.55 + (int.from_bytes(digest[:4], "big") % 4001) / 10000, 4)


@register_model("segment", REFERENCE_MODEL)
class ReferenceSegmenter(_ReferenceBase):
    """Box-prompted masks: the clipped box interior, one mask per box."""

    capability = "segment"

    def segment(self, pixels: np.ndarray, boxes) -> list[np.ndarray]:
        height, width = pixels.shape[:2]
        masks = []
        for box in boxes:
            mask = np.zeros((height, width), dtype=bool)
            clipped = _clip_box(box, width, height)
            if clipped:
                x1, y1, x2, y2 = clipped
                mask[y1:y2, x1:x2] = True
            masks.append(mask)
        return masks


@register_model("caption", REFERENCE_MODEL)
class ReferenceCaptioner(_ReferenceBase):
    """One grounded sentence listing the tape's objects and background."""

    capability = "caption"

    def caption(self, pixels: np.ndarray) -> str:
        return caption_sentence(_extract(pixels))


@register_model("score", REFERENCE_MODEL)
class ReferenceScorer(_ReferenceBase):
    """Image-text agreement as vocabulary overlap, in [0, 1].

    The fraction of the text's content words that appear in the scene tape's
    vocabulary. Untaped images share no vocabulary and score 0.
    """

    capability = "score"

    def score(self, pixels: np.ndarray, text: str) -> float:
        tape = _extract(pixels)
        if tape is None:
            return 0.0
        words = content_tokens(text)
        if not words:
            return 0.0
        vocabulary = tape.vocabulary()
        hits = sum(1 for word in words if word in vocabulary)
        return round(hits / len(words), 4)
