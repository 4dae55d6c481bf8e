"""Parsers for chat replies: feature lists, scene structures, box proposals.

Replies come from a language model and arrive in whatever shape the model
felt like that day: fenced, wrapped in prose, single-quoted, or with keys
unquoted. Each parser works through a tolerance ladder (strict JSON first,
then Python literals, then quote normalization, then field regexes) and
raises ParseError with a byte offset when nothing usable survives.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass

from ..core import Box, BoxCandidate, SceneSpec, VisualFeature

__all__ = [
    "ParseError",
    "ParsedBoxCandidates",
    "extract_entities",
    "parse_box_candidates",
    "parse_generation_prompts",
    "parse_scene_specs",
    "parse_visual_features",
    "serialize_box_candidates",
    "text_tokens",
]

STOPWORDS = frozenset(
    """
    a an the and or but with without of in on at to from by for is are was were
    be been being near beside under over behind above below its it this that
    these those there here photo image picture scene view close-up closeup
    realistic amazing beautiful set against containing sitting standing resting
    lying perched atop front back
    """.split()
)


def text_tokens(text: str) -> list[str]:
    """Lowercased word tokens with possessive suffixes stripped."""
    tokens = re.findall(r"[a-z0-9][a-z0-9'-]*", text.lower())
    return [t[:-2] if t.endswith("'s") else t for t in tokens]


def _content_words(text: str) -> list[str]:
    return [t for t in text_tokens(text) if t not in STOPWORDS]


# Capture stops at punctuation, end of text, or the start of a later
# location phrase ("on a mat in a kitchen" must not swallow "in a kitchen").
_PREPOSITION = r"(?:in|on|at|against|inside|within)"
_BACKGROUND_PATTERN = re.compile(
    rf"\b{_PREPOSITION}\s+(?:a|an|the)\s+([a-z][a-z' -]*?)"
    rf"(?=[.,;:!?]|$|\s{_PREPOSITION}\s+(?:a|an|the)\s)"
)


def extract_entities(text: str) -> tuple[str | None, list[str]]:
    """Heuristic scene reading of a caption or prompt: (background, objects).

    Objects are maximal runs of non-stopword tokens in order of appearance;
    the background is the last 'in a ...'-style phrase and is removed from
    the object list. Good enough to turn a caption into grounding queries
    without a language model in the loop.
    """
    lowered = text.lower()
    background = None
    for match in _BACKGROUND_PATTERN.finditer(lowered):
        background = " ".join(_content_words(match.group(1))) or None
    runs: list[str] = []
    current: list[str] = []
    for segment in re.split(r"[^a-z0-9' -]+", lowered):
        for token in text_tokens(segment):
            if token in STOPWORDS:
                if current:
                    runs.append(" ".join(current))
                    current = []
            else:
                current.append(token)
        if current:
            runs.append(" ".join(current))
            current = []
    seen = set()
    objects = []
    for run in runs:
        if run and run != background and run not in seen:
            seen.add(run)
            objects.append(run)
    return background, objects


class ParseError(ValueError):
    """A reply could not be turned into structured data."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\n?(.*?)```", re.DOTALL)


def strip_code_fences(text: str) -> str:
    """Replace fenced blocks with their contents; unfenced text passes through."""
    return _FENCE.sub(lambda m: m.group(1), text)


def parse_visual_features(reply: str) -> VisualFeature:
    """Split a feature list reply into phrases.

    Accepts dash- or asterisk-bulleted lines with semicolon-joined phrases
    inside a line; blank lines and empty fragments are dropped.
    """
    phrases: list[str] = []
    for line in strip_code_fences(reply).splitlines():
        body = re.sub(r"^\s*(?:[-*\u2022]|\d+[.)])\s*", "", line)
        for fragment in body.split(";"):
            cleaned = fragment.strip()
            if cleaned:
                phrases.append(cleaned)
    if not phrases:
        raise ParseError("no features parsed")
    return VisualFeature(tuple(phrases))


def parse_generation_prompts(reply: str) -> list[str]:
    """Extract text-to-image prompts from a numbered or prose reply."""
    text = strip_code_fences(reply).strip()
    if not text:
        raise ParseError("no prompts parsed")
    numbered = re.split(r"(?m)^\s*\d+[.)]\s+", text)
    if len(numbered) > 1:
        prompts = [p.strip() for p in numbered[1:] if p.strip()]
        if prompts:
            return prompts
    head, sep, tail = text.partition(":")
    if sep and "prompt" in head.lower() and tail.strip():
        return [tail.strip()]
    return [text]


def _normalize_quotes(text: str) -> str:
    # Swap single quotes for double ones without touching apostrophes
    # embedded in words (panda's) so json.loads can take another run at it.
    protected = re.sub(r"(\w)'(\w)", "\\1\x00\\2", text)
    swapped = protected.replace("'", '"')
    return swapped.replace("\x00", "'")


def _outermost_braces(text: str) -> tuple[str, int]:
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end <= start:
        raise ParseError("no scene structure found", offset=max(start, 0))
    return text[start : end + 1], start


def _load_structure(block: str, base_offset: int):
    try:
        return json.loads(block)
    except json.JSONDecodeError as primary:
        first_error = primary
    try:
        return ast.literal_eval(block)
    except (ValueError, SyntaxError):
        pass
    try:
        return json.loads(_normalize_quotes(block))
    except json.JSONDecodeError:
        raise ParseError(
            f"scene structure is not valid JSON: {first_error.msg}",
            offset=base_offset + first_error.pos,
        ) from first_error


def parse_scene_specs(reply: str) -> list[SceneSpec]:
    """Parse the {'background':[], 'objects':[], 'description':[]} reply shape.

    Surrounding prose and code fences are tolerated. Entries that violate
    scene invariants (overlong background, empty object list) are dropped;
    an empty remainder is an error.
    """
    text = strip_code_fences(reply)
    block, offset = _outermost_braces(text)
    data = _load_structure(block, offset)
    if not isinstance(data, dict):
        raise ParseError("scene structure must be a mapping", offset=offset)
    try:
        backgrounds = list(data["background"])
        objects = list(data["objects"])
        descriptions = list(data["description"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"scene structure is missing field {exc}", offset=offset) from exc
    if len(backgrounds) == 1 and objects and all(isinstance(o, str) for o in objects):
        objects = [objects]
    if not (len(backgrounds) == len(objects) == len(descriptions)):
        raise ParseError(
            "ragged scene arrays: "
            f"background={len(backgrounds)}, objects={len(objects)}, "
            f"description={len(descriptions)}"
        )
    scenes: list[SceneSpec] = []
    for background, scene_objects, description in zip(backgrounds, objects, descriptions):
        try:
            scenes.append(
                SceneSpec(
                    background=str(background),
                    objects=tuple(str(o) for o in scene_objects),
                    description=str(description),
                )
            )
        except (ValueError, TypeError):
            continue
    if not scenes:
        raise ParseError("no scenes parsed")
    return scenes


@dataclass(frozen=True)
class ParsedBoxCandidates:
    """Candidates that parsed cleanly plus a count of malformed records."""

    candidates: tuple[BoxCandidate, ...]
    skipped: int


_QUOTED = "\"([^\"]*)\"|'([^']*)'"
_LABEL_FIELD = re.compile(rf"[\"']?label[\"']?\s*:\s*(?:{_QUOTED})")
_REL_FIELD = re.compile(rf"[\"']?relationship[\"']?\s*:\s*(?:{_QUOTED})")
_BOX_FIELD = re.compile(r"[\"']?box[\"']?\s*:\s*\[([^\]]*)\]")
_RECORD_ATTEMPT = re.compile(r"\{[^{}]*?[\"']?(?:label|box)[\"']?\s*:")
_CLOSED_BLOCK = re.compile(r"\{[^{}]*\}")


def _candidate_from_block(block: str) -> BoxCandidate | None:
    try:
        data = json.loads(block)
        if isinstance(data, dict) and "label" in data and "box" in data:
            return BoxCandidate.from_dict(data)
    except (ValueError, TypeError):
        pass
    label_match = _LABEL_FIELD.search(block)
    box_match = _BOX_FIELD.search(block)
    if not label_match or not box_match:
        return None
    label = label_match.group(1) or label_match.group(2) or ""
    coords = [part.strip() for part in box_match.group(1).split(",")]
    try:
        values = [float(c) for c in coords]
    except ValueError:
        return None
    if len(values) != 4 or not all(math.isfinite(v) for v in values):
        return None
    rel_match = _REL_FIELD.search(block)
    relationship = ""
    if rel_match:
        relationship = rel_match.group(1) or rel_match.group(2) or ""
    try:
        return BoxCandidate(label=label, box=Box(*values), relationship=relationship)
    except ValueError:
        return None


def parse_box_candidates(reply: str) -> ParsedBoxCandidates:
    """Pull box proposals out of a reply, counting malformed record attempts.

    A record attempt is any brace block mentioning a label or box key,
    including truncated ones that never close. Attempts that fail to yield a
    valid candidate are counted in skipped rather than aborting the parse.
    """
    text = strip_code_fences(reply)
    attempts = len(_RECORD_ATTEMPT.findall(text))
    candidates: list[BoxCandidate] = []
    for match in _CLOSED_BLOCK.finditer(text):
        candidate = _candidate_from_block(match.group(0))
        if candidate is not None:
            candidates.append(candidate)
    if not candidates:
        raise ParseError("no candidates parsed")
    return ParsedBoxCandidates(
        candidates=tuple(candidates),
        skipped=max(0, attempts - len(candidates)),
    )


def serialize_box_candidates(candidates) -> str:
    """One strict-JSON record per line; parse_box_candidates round-trips it."""
    return "\n".join(json.dumps(c.to_dict(), ensure_ascii=False) for c in candidates)
