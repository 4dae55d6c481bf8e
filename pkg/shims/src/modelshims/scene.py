"""Scene records and the small amount of language the reference models speak.

A SceneTape is the structured content of a generated picture: one background
tag and an ordered list of (label, box) objects. The generator derives it
from the prompt, embeds it in the pixels (see imaging.write_tape), and every
labeling model recovers it from the image alone, which keeps seven separate
server processes mutually consistent with zero shared state.

Text handling is deliberately shallow: lowercase word tokens, a stopword
list for filler, and subset matching between token sets. That is enough to
turn "A red panda beside a fence in a desert dune." into a usable scene and
to answer open-vocabulary queries against it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

__all__ = [
    "SceneTape",
    "caption_sentence",
    "content_tokens",
    "instruction_background",
    "labels_match",
    "parse_prompt_scene",
    "tokens",
]

Box = tuple[float, float, float, float]

STOPWORDS = frozenset(
    """
    a an the and or of in on at to for with by from as is are was were be
    been being this that these those there here it its photo image picture
    scene view shot realistic detailed beautiful amazing stunning high
    quality close-up closeup beside near next under over behind above below
    between against atop onto into within inside front back left right
    sitting standing lying resting perched leaning walking containing set
    empty
    """.split()
)

_PREPOSITION = re.compile(r"\b(?:in|on|at|against|inside|within)\s+(?:a|an|the)\s+")


def tokens(text: str) -> list[str]:
    """Lowercase word tokens, possessive suffixes dropped."""
    found = re.findall(r"[a-z0-9][a-z0-9'-]*", text.lower())
    return [t[:-2] if t.endswith("'s") else t for t in found]


def content_tokens(text: str) -> list[str]:
    return [t for t in tokens(text) if t not in STOPWORDS]


def labels_match(query: str, target: str) -> bool:
    """Token-set subset match in either direction, e.g. panda ~ red panda."""
    q = set(content_tokens(query)) or set(tokens(query))
    t = set(content_tokens(target)) or set(tokens(target))
    if not q or not t:
        return False
    return q <= t or t <= q


def _phrase(text: str) -> str:
    return " ".join(content_tokens(text))


def _phrase_runs(text: str) -> list[str]:
    """Maximal runs of consecutive content words, order kept, deduplicated."""
    runs: list[str] = []
    current: list[str] = []
    for segment in re.split(r"[^a-z0-9' -]+", text.lower()):
        for token in tokens(segment):
            if token in STOPWORDS:
                if current:
                    runs.append(" ".join(current))
                    current = []
            else:
                current.append(token)
        if current:
            runs.append(" ".join(current))
            current = []
    seen: set[str] = set()
    unique = []
    for run in runs:
        if run and run not in seen:
            seen.add(run)
            unique.append(run)
    return unique


def parse_prompt_scene(prompt: str) -> tuple[str, list[str]]:
    """Read a generation prompt as (background tag, object labels).

    The background is the last "in a ..."-style location phrase; objects are
    the content-word runs before it, capped to keep layouts sane. A prompt
    with no location phrase gets a plain backdrop.
    """
    lowered = prompt.lower()
    background = ""
    head = lowered
    matches = list(_PREPOSITION.finditer(lowered))
    if matches:
        last = matches[-1]
        tail = lowered[last.end() :]
        background = _phrase(re.split(r"[.,;:!?]", tail, maxsplit=1)[0])
        head = lowered[: last.start()]
    objects = _phrase_runs(head)[:6]
    return background or "plain backdrop", objects


_INSTRUCTION_PATTERNS = (
    re.compile(r"background\s+(?:to|into)\s+(.+)$", re.IGNORECASE | re.DOTALL),
    re.compile(r"(?:make|set)\s+the\s+background\s+(.+)$", re.IGNORECASE | re.DOTALL),
)


def instruction_background(instruction: str) -> str:
    """New background tag named by an edit instruction.

    Instructions that do not mention a background at all still have to do
    something deterministic, so their content words become the tag.
    """
    text = instruction.strip()
    for pattern in _INSTRUCTION_PATTERNS:
        match = pattern.search(text)
        if match:
            text = match.group(1)
            break
    tag = " ".join(text.lower().strip(" .!?").split())
    return tag or "plain backdrop"


@dataclass
class SceneTape:
    """What a generated image depicts: background tag plus object layout."""

    background: str
    objects: list[tuple[str, Box]] = field(default_factory=list)

    def to_bytes(self) -> bytes:
        doc = {
            "background": self.background,
            "objects": [
                [label, [round(c, 2) for c in box]] for label, box in self.objects
            ],
        }
        return json.dumps(doc, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> "SceneTape | None":
        try:
            doc = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return None
        if not isinstance(doc, dict) or not isinstance(doc.get("background"), str):
            return None
        entries = doc.get("objects")
        if not isinstance(entries, list):
            return None
        objects: list[tuple[str, Box]] = []
        for entry in entries:
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not isinstance(entry[0], str)
                or not isinstance(entry[1], list)
                or len(entry[1]) != 4
                or not all(isinstance(c, (int, float)) for c in entry[1])
            ):
                return None
            objects.append((entry[0], tuple(float(c) for c in entry[1])))
        return cls(background=doc["background"], objects=objects)

    def labels(self) -> list[str]:
        seen: set[str] = set()
        out = []
        for label, _ in self.objects:
            key = " ".join(label.casefold().split())
            if key not in seen:
                seen.add(key)
                out.append(label)
        return out

    def vocabulary(self) -> set[str]:
        words = set(content_tokens(self.background))
        for label, _ in self.objects:
            words.update(content_tokens(label))
        return words


def _article(phrase: str) -> str:
    return "an" if phrase[:1] in "aeiou" else "a"


def caption_sentence(tape: SceneTape | None) -> str:
    """One grounded sentence per image; unreadable scenes say so."""
    if tape is None:
        return "an unannotated scene."
    names = tape.labels()
    where = f"{_article(tape.background)} {tape.background}"
    if not names:
        return f"an empty {tape.background} scene."
    listed = [f"{_article(name)} {name}" for name in names]
    if len(listed) == 1:
        subject = listed[0]
    else:
        subject = ", ".join(listed[:-1]) + f" and {listed[-1]}"
    return f"there is {subject} in {where}."
