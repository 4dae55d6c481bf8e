"""Regenerate the golden rendered-prompt files under tests/goldens/.

Run from the repository root after an intentional template change, then review
the diff by eye before committing: the goldens are the contract.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from fixtures import (  # noqa: E402
    BENCH,
    DOG,
    FIELD_CAPTION,
    LEMUR,
    LEMUR_FEATURES,
    RED_PANDA,
    prompt_transcript,
)

from synthpipe.prompts.render import (  # noqa: E402
    default_demonstration,
    render_aigc_creator,
    render_box_candidates,
    render_scene_imagination,
    render_visual_descriptor,
)

GOLDENS = pathlib.Path(__file__).resolve().parent.parent / "tests" / "goldens"


def main() -> None:
    GOLDENS.mkdir(parents=True, exist_ok=True)
    rendered = {
        "prompt_visual_descriptor.txt": render_visual_descriptor(LEMUR),
        "prompt_aigc_creator.txt": render_aigc_creator(
            RED_PANDA, LEMUR_FEATURES, 1, demonstrations=(default_demonstration(),)
        ),
        "prompt_scene_imagination.txt": render_scene_imagination(
            FIELD_CAPTION, ["dog", "bench"], 2
        ),
        "prompt_box_candidates.txt": render_box_candidates(
            FIELD_CAPTION, [BENCH, DOG], ["cat"], prompt_number=1
        ),
    }
    for name, request in rendered.items():
        path = GOLDENS / name
        path.write_text(prompt_transcript(request), encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
