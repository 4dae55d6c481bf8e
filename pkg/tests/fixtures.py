"""Shared fixture texts and values used across test modules.

These are typed out here independently of the package's asset files so golden
comparisons actually have two sources that must agree.
"""

from synthpipe.core import Box, DetectedObject, LabelWord, VisualFeature

FIELD_CAPTION = "there is a dog sitting on a bench in a field."

BENCH = DetectedObject("bench", Box(33.93, 224.34, 463.20, 491.01), 0.84)
DOG = DetectedObject("dog", Box(175.71, 116.29, 311.58, 367.13), 0.43)

CAT_BOX = Box(343.23, 176.29, 467.23, 353.13)
CAT_RELATIONSHIP = "sitting next to the dog."

# A chat reply in the mixed-quote style the box-candidates prompt produces:
# double-quoted keys, single-quoted strings.
CAT_RETURN_RESULT = (
    '{"label": \'cat\', "box": [343.23, 176.29, 467.23, 353.13], '
    '"relationship": \'sitting next to the dog.\'}'
)

# Object-filling example: unquoted keys, single-quoted values, integer coords.
ROCKS_TEXT = (
    "{label: 'rocks', box: [200, 50, 300, 150], "
    "relationship: 'near the cabin and surrounded by trees'}"
)
ROCKS_BOX = Box(200.0, 50.0, 300.0, 150.0)

# Feature brainstorm reply for "Lemur": five dash-led lines, two phrases each,
# semicolon separated (the second line pair below keeps its double space).
LEMUR_FEATURES_REPLY = """- Large, forward-facing eyes with binocular vision; Soft, thick fur covering the body

- Long, bushy tail; Striking coloration patterns such as black and white rings

- Slender fingers and toes with opposable thumbs for grasping and climbing;  Prominent ears that can be pointed or rounded with tufts of fur

- Wet, reflective nose; Rounded head with a shortened snout and large ears

- Relatively small body size, typically weighing between 2 and 5 kilograms; Distinctive vocalization or call that can vary between species and subspecies"""

LEMUR_PHRASES = (
    "Large, forward-facing eyes with binocular vision",
    "Soft, thick fur covering the body",
    "Long, bushy tail",
    "Striking coloration patterns such as black and white rings",
    "Slender fingers and toes with opposable thumbs for grasping and climbing",
    "Prominent ears that can be pointed or rounded with tufts of fur",
    "Wet, reflective nose",
    "Rounded head with a shortened snout and large ears",
    "Relatively small body size, typically weighing between 2 and 5 kilograms",
    "Distinctive vocalization or call that can vary between species and subspecies",
)

LEMUR = LabelWord("Lemur")
RED_PANDA = LabelWord("red panda")
LEMUR_FEATURES = VisualFeature(LEMUR_PHRASES)


def prompt_transcript(request) -> str:
    """Stable one-string form of a PromptRequest for golden-file comparison."""
    return "\n\n".join(f"[{m.role}]\n{m.content}" for m in request.messages) + "\n"
