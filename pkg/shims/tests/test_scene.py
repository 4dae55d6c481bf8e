"""Scene records and the prompt/instruction/caption language around them."""

from modelshims.scene import (
    SceneTape,
    caption_sentence,
    content_tokens,
    instruction_background,
    labels_match,
    parse_prompt_scene,
    tokens,
)


class TestTokens:
    def test_basic_tokenization(self):
        assert tokens("A Red Panda's tail!") == ["a", "red", "panda", "tail"]

    def test_content_words_drop_filler(self):
        assert content_tokens("a photo of a red panda sitting in the grass") == [
            "red",
            "panda",
            "grass",
        ]

    def test_match_is_subset_both_ways(self):
        assert labels_match("panda", "red panda")
        assert labels_match("red panda", "panda")
        assert labels_match("Red Panda", "red panda")
        assert not labels_match("panda", "fence")
        assert not labels_match("", "fence")


class TestPromptScene:
    def test_objects_and_background(self):
        background, objects = parse_prompt_scene(
            "A red panda beside a signpost and a fence in a desert dune."
        )
        assert background == "desert dune"
        assert objects == ["red panda", "signpost", "fence"]

    def test_posture_words_split_runs(self):
        background, objects = parse_prompt_scene(
            "A red panda sitting on a bench in a field."
        )
        assert background == "field"
        assert objects == ["red panda", "bench"]

    def test_last_location_phrase_wins(self):
        background, objects = parse_prompt_scene("A cat on a mat in a kitchen.")
        assert background == "kitchen"
        assert objects == ["cat", "mat"]

    def test_no_location_gets_plain_backdrop(self):
        background, objects = parse_prompt_scene("A lighthouse.")
        assert background == "plain backdrop"
        assert objects == ["lighthouse"]

    def test_object_cap(self):
        prompt = "A one and a two and a three and a four and a five and a six and a seven in a box."
        _, objects = parse_prompt_scene(prompt)
        assert len(objects) == 6


class TestInstructionBackground:
    def test_change_to(self):
        assert (
            instruction_background("change the background to autumn orchard")
            == "autumn orchard"
        )

    def test_trailing_punctuation_stripped(self):
        assert instruction_background("Set the background to Snowy Hill.") == "snowy hill"

    def test_unrecognized_instruction_still_deterministic(self):
        tag = instruction_background("more dramatic lighting")
        assert tag == "more dramatic lighting"
        assert instruction_background("") == "plain backdrop"


class TestTapeSerialization:
    def test_round_trip(self):
        tape = SceneTape("desert dune", [("red panda", (1.0, 2.0, 3.5, 4.25))])
        back = SceneTape.from_bytes(tape.to_bytes())
        assert back == tape

    def test_corrupt_bytes_return_none(self):
        assert SceneTape.from_bytes(b"\xff\xfe") is None
        assert SceneTape.from_bytes(b"[1,2]") is None
        assert SceneTape.from_bytes(b'{"background": 3, "objects": []}') is None
        assert SceneTape.from_bytes(b'{"background": "x", "objects": [["a", [1,2]]]}') is None

    def test_labels_deduplicate_in_order(self):
        tape = SceneTape(
            "field",
            [("fence", (0, 0, 1, 1)), ("cat", (1, 1, 2, 2)), ("Fence", (2, 2, 3, 3))],
        )
        assert tape.labels() == ["fence", "cat"]

    def test_vocabulary_pools_labels_and_background(self):
        tape = SceneTape("quiet harbor", [("red panda", (0, 0, 1, 1))])
        assert tape.vocabulary() == {"quiet", "harbor", "red", "panda"}


class TestCaption:
    def test_lists_objects_then_background(self):
        tape = SceneTape(
            "autumn orchard",
            [("red panda", (0, 0, 1, 1)), ("fence", (1, 1, 2, 2))],
        )
        assert (
            caption_sentence(tape)
            == "there is a red panda and a fence in an autumn orchard."
        )

    def test_single_object(self):
        tape = SceneTape("field", [("owl", (0, 0, 1, 1))])
        assert caption_sentence(tape) == "there is an owl in a field."

    def test_empty_scene(self):
        assert caption_sentence(SceneTape("foggy moor", [])) == "an empty foggy moor scene."

    def test_unreadable_scene(self):
        assert caption_sentence(None) == "an unannotated scene."
