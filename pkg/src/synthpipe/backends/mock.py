"""A deterministic in-process world implementing every backend capability.

The world keeps a registry of every image it has produced: which background
phrase it was painted with and which labeled boxes sit on it. Generation
paints flat-color scenes from that vocabulary, and the labeling capabilities
answer from the registry, so a pipeline run against the mock behaves like a
coherent (if cartoonish) model zoo: whatever was generated can be detected,
captioned, segmented, and scored again.

Determinism rules: every image-producing call derives its randomness from the
request seed alone, chat replies are pure functions of (world seed, prompt
text), and nothing reads shared RNG state. Replaying a lineage against a
fresh world with the same seed therefore reproduces identical pixels. Colors
are confined to a narrow mid-tone band so that faithful edits stay within the
default pixel-similarity gates.
"""

from __future__ import annotations

import hashlib
import random
import re
import threading
from dataclasses import dataclass

import numpy as np

from ..core import Box, Canvas, DetectedObject, SegmentMask, derive_seed
from ..geometry import iou
from ..prompts.parse import STOPWORDS, extract_entities, text_tokens
from .client import BackendEndpoint, BackendError, BackendKindMismatch
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
    ScoreReply,
    ScoreRequest,
    SegmentReply,
    SegmentRequest,
)

__all__ = ["MockWorld", "make_mock_world", "extract_entities", "text_tokens"]

BACKGROUND_VOCAB = (
    "snowy forest",
    "sunlit meadow",
    "quiet harbor",
    "desert dune",
    "mossy canyon",
    "autumn orchard",
    "foggy moor",
    "alpine lake",
)
OBJECT_VOCAB = (
    "bench",
    "lantern",
    "stream",
    "boulder",
    "pine tree",
    "fence",
    "wagon",
    "basket",
    "footbridge",
    "haystack",
    "signpost",
    "canoe",
)
_FEATURE_ADJECTIVES = (
    "glossy",
    "striped",
    "slender",
    "rounded",
    "speckled",
    "tufted",
    "sleek",
    "banded",
)
_FEATURE_PARTS = ("fur", "ears", "tail", "eyes", "paws", "snout", "whiskers", "markings")

# Flat-color palette band: any two colors differ by at most PALETTE_SPAN-1 per
# channel, which keeps PSNR of a faithful mock edit above the default gate.
PALETTE_LOW = 118
PALETTE_SPAN = 21


def _content_words(text: str) -> list[str]:
    return [t for t in text_tokens(text) if t not in STOPWORDS]


def color_for(tag: str) -> tuple[int, int, int]:
    digest = hashlib.sha256(f"palette:{tag}".encode("utf-8")).digest()
    return tuple(PALETTE_LOW + b % PALETTE_SPAN for b in digest[:3])


@dataclass
class _WorldImage:
    pixels: np.ndarray
    background: str
    objects: list[tuple[str, Box]]


def _norm(label: str) -> frozenset[str]:
    return frozenset(text_tokens(label))


def _labels_match(query: str, target: str) -> bool:
    q, t = _norm(query), _norm(target)
    if not q or not t:
        return False
    return q <= t or t <= q


class MockWorld:
    """Shared registry behind the mock: scheme endpoints of one run."""

    def __init__(self, seed: int):
        self.seed = seed
        self._images: dict[str, _WorldImage] = {}
        self._lock = threading.RLock()

    # Registry plumbing

    def _register(self, pixels: np.ndarray, background: str, objects) -> ImagePayload:
        payload = ImagePayload.from_pixels(pixels)
        with self._lock:
            self._images.setdefault(
                payload.ref.id,
                _WorldImage(pixels=payload.pixels, background=background, objects=list(objects)),
            )
        return payload

    def _materialize(self, payload: ImagePayload) -> _WorldImage:
        with self._lock:
            entry = self._images.get(payload.ref.id)
            if entry is None:
                # Foreign image: adopt it with an empty registry entry so the
                # labeling capabilities degrade gracefully instead of failing.
                entry = _WorldImage(
                    pixels=payload.pixels, background="unfamiliar backdrop", objects=[]
                )
                self._images[payload.ref.id] = entry
            return entry

    def image(self, image_id: str) -> _WorldImage:
        with self._lock:
            return self._images[image_id]

    def remove_object(self, image_id: str, label: str) -> None:
        """Drop a registered object so detection no longer sees it (test hook)."""
        with self._lock:
            entry = self._images[image_id]
            entry.objects = [(l, b) for l, b in entry.objects if l != label]

    def endpoints(self) -> dict[CapabilityKind, BackendEndpoint]:
        return {
            kind: BackendEndpoint(kind=kind, base_url="mock:", timeout=5.0, max_retries=0)
            for kind in CapabilityKind
        }

    # Dispatch

    def invoke(self, kind: CapabilityKind, request):
        handlers = {
            CapabilityKind.CHAT: (ChatRequest, self._chat),
            CapabilityKind.TEXT_TO_IMAGE: (GenRequest, self._txt2img),
            CapabilityKind.INSTRUCT_EDIT: (EditRequest, self._edit),
            CapabilityKind.REGION_INPAINT: (InpaintRequest, self._inpaint),
            CapabilityKind.DETECT: (DetectRequest, self._detect),
            CapabilityKind.SEGMENT: (SegmentRequest, self._segment),
            CapabilityKind.CAPTION: (CaptionRequest, self._caption),
            CapabilityKind.SCORE: (ScoreRequest, self._score),
        }
        expected, handler = handlers[kind]
        if not isinstance(request, expected):
            raise BackendKindMismatch(
                f"{type(request).__name__} sent to the mock {kind.value} capability"
            )
        return handler(request)

    # Image synthesis

    def _paint(self, canvas: Canvas, background: str, objects) -> np.ndarray:
        pixels = np.empty((canvas.height, canvas.width, 3), dtype=np.uint8)
        pixels[:] = color_for(background)
        for label, box in objects:
            x1 = max(0, int(round(box.x1)))
            y1 = max(0, int(round(box.y1)))
            x2 = min(canvas.width, int(round(box.x2)))
            y2 = min(canvas.height, int(round(box.y2)))
            if x2 > x1 and y2 > y1:
                pixels[y1:y2, x1:x2] = color_for(label)
        return pixels

    @staticmethod
    def _place_box(rng: random.Random, canvas: Canvas, taken: list[Box], lo: float, hi: float, iou_cap: float) -> Box:
        side_hi = min(hi, 0.55 * min(canvas.width, canvas.height))
        side_lo = min(lo, side_hi * 0.5)
        box = None
        for _ in range(60):
            w = round(rng.uniform(side_lo, side_hi), 2)
            h = round(rng.uniform(side_lo, side_hi), 2)
            x1 = round(rng.uniform(0.0, canvas.width - w), 2)
            y1 = round(rng.uniform(0.0, canvas.height - h), 2)
            box = Box(x1, y1, round(x1 + w, 2), round(y1 + h, 2))
            if all(iou(box, other) <= iou_cap for other in taken):
                return box
        return box

    def _txt2img(self, request: GenRequest) -> GenReply:
        background, objects = extract_entities(request.prompt)
        background = background or "plain backdrop"
        images = []
        for index in range(request.count):
            rng = random.Random(derive_seed("mock-txt2img", request.seed, index))
            placed: list[tuple[str, Box]] = []
            taken: list[Box] = []
            for label in objects[:6]:
                box = self._place_box(rng, request.canvas, taken, 90.0, 280.0, 0.2)
                placed.append((label, box))
                taken.append(box)
            pixels = self._paint(request.canvas, background, placed)
            images.append(self._register(pixels, background, placed))
        return GenReply(images=tuple(images))

    def _edit(self, request: EditRequest) -> EditReply:
        entry = self._materialize(request.image)
        match = re.search(r"background to (.+)$", request.instruction.strip(), re.IGNORECASE | re.DOTALL)
        tag = (match.group(1) if match else request.instruction).strip().strip("'\".")
        canvas = Canvas(entry.pixels.shape[1], entry.pixels.shape[0])
        pixels = self._paint(canvas, tag, entry.objects)
        return EditReply(image=self._register(pixels, tag, entry.objects))

    def _inpaint(self, request: InpaintRequest) -> InpaintReply:
        entry = self._materialize(request.image)
        pixels = entry.pixels.copy()
        h, w = pixels.shape[:2]
        x1 = max(0, int(round(request.box.x1)))
        y1 = max(0, int(round(request.box.y1)))
        x2 = min(w, int(round(request.box.x2)))
        y2 = min(h, int(round(request.box.y2)))
        if x2 <= x1 or y2 <= y1:
            raise BackendError("inpaint box lies outside the image")
        pixels[y1:y2, x1:x2] = color_for(request.label)
        objects = entry.objects + [(request.label, request.box)]
        return InpaintReply(image=self._register(pixels, entry.background, objects))

    # Labeling

    def _det_score(self, image_id: str, query: str) -> float:
        digest = hashlib.sha256(f"det:{image_id}:{query}".encode("utf-8")).digest()
        value = int.from_bytes(digest[:2], "big") % 4096
        return round(0.55 + 0.44 * value / 4096.0, 4)

    def _detect(self, request: DetectRequest) -> DetectReply:
        entry = self._materialize(request.image)
        h, w = entry.pixels.shape[:2]
        found = []
        for query in request.labels:
            for label, box in entry.objects:
                if _labels_match(query, label):
                    found.append(
                        DetectedObject(
                            label=query, box=box, score=self._det_score(request.image.ref.id, query)
                        )
                    )
            if _labels_match(query, entry.background):
                found.append(
                    DetectedObject(
                        label=query,
                        box=Box(0.0, 0.0, float(w), float(h)),
                        score=self._det_score(request.image.ref.id, query),
                    )
                )
        return DetectReply(objects=tuple(found))

    def _segment(self, request: SegmentRequest) -> SegmentReply:
        entry = self._materialize(request.image)
        h, w = entry.pixels.shape[:2]
        masks = []
        for index, box in enumerate(request.boxes):
            mask = np.zeros((h, w), dtype=bool)
            x1 = max(0, int(round(box.x1)))
            y1 = max(0, int(round(box.y1)))
            x2 = min(w, int(round(box.x2)))
            y2 = min(h, int(round(box.y2)))
            if x2 > x1 and y2 > y1:
                mask[y1:y2, x1:x2] = True
            masks.append(SegmentMask.from_array(index, mask))
        return SegmentReply(masks=tuple(masks))

    def _caption(self, request: CaptionRequest) -> CaptionReply:
        entry = self._materialize(request.image)
        labels = []
        for label, _ in entry.objects:
            if label not in labels:
                labels.append(label)
        if not labels:
            return CaptionReply(caption=f"an empty {entry.background} scene.")
        if len(labels) == 1:
            listing = f"a {labels[0]}"
        else:
            listing = ", ".join(f"a {l}" for l in labels[:-1]) + f" and a {labels[-1]}"
        return CaptionReply(caption=f"there is {listing} in a {entry.background}.")

    def _score(self, request: ScoreRequest) -> ScoreReply:
        entry = self._materialize(request.image)
        registry_words = set(_content_words(entry.background))
        for label, _ in entry.objects:
            registry_words.update(_content_words(label))
        text_words = set(_content_words(request.text))
        if not registry_words or not text_words:
            return ScoreReply(score=0.0)
        overlap = len(registry_words & text_words)
        union = len(registry_words | text_words)
        return ScoreReply(score=round(overlap / union, 6))

    # Chat

    def _chat(self, request: ChatRequest) -> ChatReply:
        # Slot values are read from the user message alone; a demonstration
        # appended to the system text must not confuse the extraction.
        text = request.prompt.messages[-1].content
        if "useful visual features for distinguishing" in text:
            return ChatReply(text=self._features_reply(text))
        if "real scene descriptions based on the context" in text:
            return ChatReply(text=self._scenes_reply(text))
        if "high quality prompts for text-to-image models" in text:
            return ChatReply(text=self._creator_reply(text))
        if "possible prediction of the remaining box coordinates" in text:
            return ChatReply(text=self._boxes_reply(text))
        return ChatReply(text="I can only brainstorm synthetic scene prompts.")

    def _features_reply(self, text: str) -> str:
        match = re.search(r"distinguishing a (.+?) in a photo\?", text)
        category = match.group(1) if match else "subject"
        rng = random.Random(derive_seed("mock-chat-features", self.seed, category))
        combos = [(a, p) for a in _FEATURE_ADJECTIVES for p in _FEATURE_PARTS]
        picks = rng.sample(combos, 9)
        phrases = [f"distinctive {category} silhouette"] + [f"{a} {p}" for a, p in picks]
        lines = []
        for i in range(0, 10, 2):
            lines.append(f"- {phrases[i]}; {phrases[i + 1]}")
        return "\n".join(lines)

    def _creator_reply(self, text: str) -> str:
        count_match = re.search(r"Give me (\d+) high quality prompts", text)
        label_match = re.search(r"scene containing the (.+?)\. Scene prompts", text)
        count = int(count_match.group(1)) if count_match else 1
        label = label_match.group(1) if label_match else "subject"
        rng = random.Random(derive_seed("mock-chat-creator", self.seed, label, count))
        lines = [
            f"Sure, here are {count} high quality prompts for text-to-image models "
            f"about the amazing close-up realistic scene containing the {label}:"
        ]
        for i in range(1, count + 1):
            extra_a, extra_b = rng.sample(OBJECT_VOCAB, 2)
            background = rng.choice(BACKGROUND_VOCAB)
            lines.append(f"{i}. A {label} beside a {extra_a} and a {extra_b} in a {background}.")
        return "\n".join(lines)

    def _scenes_reply(self, text: str) -> str:
        count_match = re.search(r"Give me (\d+) real scene descriptions", text)
        caption_match = re.search(r"based on the context (.+?)\. The scene objects", text, re.DOTALL)
        exist_match = re.search(r"should consist (.+?), and also contain", text, re.DOTALL)
        count = int(count_match.group(1)) if count_match else 1
        caption = caption_match.group(1) if caption_match else "a scene"
        exist = [e.strip() for e in exist_match.group(1).split(",")] if exist_match else []
        exist = [e for e in exist if e]
        rng = random.Random(
            derive_seed("mock-chat-scenes", self.seed, caption, ",".join(exist), count)
        )
        backgrounds = rng.sample(BACKGROUND_VOCAB, min(count, len(BACKGROUND_VOCAB)))
        while len(backgrounds) < count:
            backgrounds.append(rng.choice(BACKGROUND_VOCAB))
        scene_objects = []
        descriptions = []
        for background in backgrounds:
            extras = rng.sample(OBJECT_VOCAB, 5)
            objects = [o for o in exist if o] + extras
            scene_objects.append(objects)
            listing = " and a ".join(objects)
            descriptions.append(f"A {listing} in a {background}.")
        structure = {
            "background": backgrounds,
            "objects": scene_objects,
            "description": descriptions,
        }
        return repr(structure)

    def _boxes_reply(self, text: str) -> str:
        count_match = re.search(r"make (\d+) possible prediction", text, re.IGNORECASE)
        target_match = re.search(r"following objects (.+?)\. The size", text, re.DOTALL)
        canvas_match = re.search(r"image size is \((\d+),(\d+)\)", text)
        count = int(count_match.group(1)) if count_match else 1
        targets = [t.strip() for t in target_match.group(1).split(",")] if target_match else []
        targets = [t for t in targets if t] or ["object"]
        canvas = Canvas(int(canvas_match.group(1)), int(canvas_match.group(2))) if canvas_match else Canvas()
        existing_labels = re.findall(r'"label": "([^"]+)"', text)
        existing_boxes = []
        for coords in re.findall(r'"box": \[([^\]]+)\]', text):
            values = [float(v) for v in coords.split(",")]
            if len(values) == 4 and values[0] < values[2] and values[1] < values[3]:
                existing_boxes.append(Box(*values))
        rng = random.Random(derive_seed("mock-chat-boxes", self.seed, text))
        taken = list(existing_boxes)
        lines = []
        for i in range(count):
            target = targets[i % len(targets)]
            box = None
            for _ in range(200):
                w = round(rng.uniform(80.0, min(295.0, 0.55 * canvas.width)), 2)
                h = round(rng.uniform(80.0, min(295.0, 0.55 * canvas.height)), 2)
                x1 = round(rng.uniform(0.0, canvas.width - w), 2)
                y1 = round(rng.uniform(0.0, canvas.height - h), 2)
                box = Box(x1, y1, round(x1 + w, 2), round(y1 + h, 2))
                if all(iou(box, other) <= 0.25 for other in taken):
                    break
            taken.append(box)
            anchor = existing_labels[0] if existing_labels else "scene"
            relation = rng.choice(("next to", "near", "beside"))
            lines.append(
                f'{{"label": \'{target}\', "box": [{box.x1:.2f}, {box.y1:.2f}, '
                f'{box.x2:.2f}, {box.y2:.2f}], "relationship": \'{relation} the {anchor}.\'}}'
            )
        return "\n".join(lines)


def make_mock_world(seed: int) -> MockWorld:
    """Create a fresh mock world; equal seeds give byte-identical behavior."""
    return MockWorld(seed)
