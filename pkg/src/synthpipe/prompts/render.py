"""Chat prompt construction from fixed templates.

Templates live as plain text assets with named {slot} markers. Filling is a
single pass over the template, values are never re-scanned for slots, and any
slot-shaped text inside a value is defused, so a rendered prompt can never
carry an unfilled or injected marker.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from ..core import Canvas, DetectedObject, LabelWord, VisualFeature

__all__ = [
    "Demonstration",
    "PromptMessage",
    "PromptRequest",
    "default_demonstration",
    "format_existing_boxes",
    "render_aigc_creator",
    "render_box_candidates",
    "render_scene_imagination",
    "render_visual_descriptor",
]

SLOT_NAMES = (
    "category name",
    "prompt number",
    "label word",
    "visual feature",
    "scene number",
    "caption",
    "exist objects",
    "existing boxes info",
    "target objects",
    "canvas width",
    "canvas height",
    "demonstrations",
)
_SLOT_PATTERN = re.compile("|".join(re.escape("{" + name + "}") for name in SLOT_NAMES))

ROLES = ("system", "user")


def _load_asset(name: str) -> str:
    text = resources.files(__package__).joinpath("assets", name).read_text("utf-8")
    return text.rstrip("\n")


@dataclass(frozen=True)
class PromptMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown prompt role {self.role!r}")
        if _SLOT_PATTERN.search(self.content):
            raise ValueError("prompt message still contains an unfilled slot marker")


@dataclass(frozen=True)
class PromptRequest:
    messages: tuple[PromptMessage, ...]
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("prompt request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    def text(self) -> str:
        return "\n".join(m.content for m in self.messages)


@dataclass(frozen=True)
class Demonstration:
    """A canned assistant reply appended to a system message as an example."""

    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("demonstration text must be non-empty")


def default_demonstration() -> Demonstration:
    return Demonstration(_load_asset("demonstration_default.txt"))


def _defuse(value: str) -> str:
    # A value containing "{caption}" etc. must not look like a slot downstream.
    return _SLOT_PATTERN.sub(lambda m: "(" + m.group(0)[1:-1] + ")", value)


def _fill(template: str, values: dict[str, str]) -> str:
    safe = {name: _defuse(text) for name, text in values.items()}

    def replace(match: re.Match) -> str:
        name = match.group(0)[1:-1]
        if name not in safe:
            raise ValueError(f"template slot {name!r} has no value")
        return safe[name]

    return _SLOT_PATTERN.sub(replace, template)


def render_visual_descriptor(label: LabelWord) -> PromptRequest:
    """Ask for fine-grained visual features of the label."""
    values = {"category name": label.text}
    return PromptRequest(
        messages=(
            PromptMessage("system", _load_asset("visual_descriptor_system.txt")),
            PromptMessage("user", _fill(_load_asset("visual_descriptor_user.txt"), values)),
        )
    )


def render_aigc_creator(
    label: LabelWord,
    features: VisualFeature,
    prompt_number: int,
    demonstrations: Sequence[Demonstration] = (),
) -> PromptRequest:
    """Ask for text-to-image scene prompts about the label.

    Demonstrations are appended to the system message, newline separated, so
    the model sees worked examples of the expected answer shape.
    """
    if prompt_number < 1:
        raise ValueError("prompt_number must be at least 1")
    if not features.phrases:
        raise ValueError("visual features are required to render a creator prompt")
    demo_block = "".join("\n" + d.text for d in demonstrations)
    system = _fill(_load_asset("aigc_creator_system.txt"), {"demonstrations": demo_block})
    user = _fill(
        _load_asset("aigc_creator_user.txt"),
        {
            "prompt number": str(prompt_number),
            "label word": label.text,
            "visual feature": "; ".join(features.phrases),
        },
    )
    return PromptRequest(messages=(PromptMessage("system", system), PromptMessage("user", user)))


def render_scene_imagination(
    caption: str,
    exist_objects: Sequence[str],
    scene_number: int,
) -> PromptRequest:
    """Ask for scene variations grounded in a caption and its known objects."""
    if scene_number < 1:
        raise ValueError("scene_number must be at least 1")
    if not caption.strip():
        raise ValueError("caption must be non-empty")
    exist = [o.strip() for o in exist_objects if o.strip()]
    if not exist:
        raise ValueError("exist_objects must name at least one object")
    user = _fill(
        _load_asset("scene_imagination_user.txt"),
        {
            "scene number": str(scene_number),
            "caption": caption.strip(),
            "exist objects": ", ".join(exist),
        },
    )
    return PromptRequest(
        messages=(
            PromptMessage("system", _load_asset("scene_imagination_system.txt")),
            PromptMessage("user", user),
        )
    )


def format_existing_boxes(objects: Sequence[DetectedObject]) -> str:
    """Serialize detections the way box-candidate prompts expect them.

    One record per object, 1-based value, two-decimal logit and coordinates:
    {"value": 1, "label": "bench", "logit": 0.84, "box": [33.93, ...]}
    """
    parts = []
    for value, obj in enumerate(objects, start=1):
        coords = ", ".join(f"{c:.2f}" for c in obj.box.as_tuple())
        parts.append(
            f'{{"value": {value}, "label": "{obj.label}", '
            f'"logit": {obj.score:.2f}, "box": [{coords}]}}'
        )
    return ", ".join(parts)


def render_box_candidates(
    caption: str,
    existing: Sequence[DetectedObject],
    targets: Sequence[str],
    prompt_number: int,
    canvas: Canvas = Canvas(),
) -> PromptRequest:
    """Ask for box placements for target objects given the existing layout."""
    if prompt_number < 1:
        raise ValueError("prompt_number must be at least 1")
    if not caption.strip():
        raise ValueError("caption must be non-empty")
    if not existing:
        raise ValueError("existing detections are required to anchor box predictions")
    target_list = [t.strip() for t in targets if t.strip()]
    if not target_list:
        raise ValueError("targets must name at least one object")
    user = _fill(
        _load_asset("box_candidates_user.txt"),
        {
            "prompt number": str(prompt_number),
            "caption": caption.strip(),
            "canvas width": str(canvas.width),
            "canvas height": str(canvas.height),
            "existing boxes info": format_existing_boxes(existing),
            "target objects": ", ".join(target_list),
        },
    )
    return PromptRequest(messages=(PromptMessage("user", user),))
