"""Prompt templates, rendering, and reply parsing for the chat backend."""

from .parse import (
    ParsedBoxCandidates,
    ParseError,
    parse_box_candidates,
    parse_generation_prompts,
    parse_scene_specs,
    parse_visual_features,
    serialize_box_candidates,
    strip_code_fences,
)
from .render import (
    Demonstration,
    PromptMessage,
    PromptRequest,
    default_demonstration,
    format_existing_boxes,
    render_aigc_creator,
    render_box_candidates,
    render_scene_imagination,
    render_visual_descriptor,
)

__all__ = [
    "Demonstration",
    "ParseError",
    "ParsedBoxCandidates",
    "PromptMessage",
    "PromptRequest",
    "default_demonstration",
    "format_existing_boxes",
    "parse_box_candidates",
    "parse_generation_prompts",
    "parse_scene_specs",
    "parse_visual_features",
    "render_aigc_creator",
    "render_box_candidates",
    "render_scene_imagination",
    "render_visual_descriptor",
    "serialize_box_candidates",
    "strip_code_fences",
]
