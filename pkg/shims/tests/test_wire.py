"""Request validation: exactly the published schemas, enforced by hand."""

import pytest

from modelshims.wire import (
    CAPABILITIES,
    ROUTES,
    SCHEMA_VERSION,
    RequestError,
    check_version,
    error_body,
    validate_request,
)

PAYLOAD = {"png_base64": "aGVsbG8="}

GOOD = {
    "text_to_image": {
        "schema_version": "1",
        "prompt": "a cat in a field",
        "canvas": {"width": 64, "height": 64},
        "seed": 0,
    },
    "instruct_edit": {
        "schema_version": "1",
        "image": PAYLOAD,
        "instruction": "change the background to snow",
        "seed": 1,
    },
    "region_inpaint": {
        "schema_version": "1",
        "image": PAYLOAD,
        "box": [1, 2, 3, 4],
        "label": "rock",
        "seed": 2,
    },
    "detect": {"schema_version": "1", "image": PAYLOAD, "labels": ["cat"]},
    "segment": {"schema_version": "1", "image": PAYLOAD, "boxes": [[0, 0, 5, 5]]},
    "caption": {"schema_version": "1", "image": PAYLOAD},
    "score": {"schema_version": "1", "image": PAYLOAD, "text": "a cat"},
}


class TestVersioning:
    def test_routes_cover_every_capability(self):
        assert set(ROUTES) == set(CAPABILITIES)
        assert all(route.startswith("/v1/") for route in ROUTES.values())

    def test_error_body_is_versioned(self):
        body = error_body("boom")
        assert body == {"schema_version": SCHEMA_VERSION, "error": "boom"}

    @pytest.mark.parametrize("version", ["2", "", None, 1])
    def test_wrong_version_rejected(self, version):
        body = {"schema_version": version}
        if version is None:
            body = {}
        with pytest.raises(RequestError, match="schema_version"):
            check_version(body)

    def test_non_object_body_rejected(self):
        with pytest.raises(RequestError, match="JSON object"):
            check_version([1, 2, 3])


class TestShapes:
    @pytest.mark.parametrize("capability", sorted(CAPABILITIES))
    def test_good_request_passes(self, capability):
        assert validate_request(capability, GOOD[capability]) is GOOD[capability]

    @pytest.mark.parametrize("capability", sorted(CAPABILITIES))
    def test_unknown_key_rejected(self, capability):
        body = dict(GOOD[capability], surprise=1)
        with pytest.raises(RequestError, match="surprise"):
            validate_request(capability, body)

    def test_seed_must_be_integer(self):
        body = dict(GOOD["text_to_image"], seed=True)
        with pytest.raises(RequestError, match="seed"):
            validate_request("text_to_image", body)
        body = dict(GOOD["text_to_image"], seed=-1)
        with pytest.raises(RequestError, match="seed"):
            validate_request("text_to_image", body)

    def test_count_minimum(self):
        body = dict(GOOD["text_to_image"], count=0)
        with pytest.raises(RequestError, match="count"):
            validate_request("text_to_image", body)

    def test_canvas_shape(self):
        body = dict(GOOD["text_to_image"], canvas={"width": 64})
        with pytest.raises(RequestError, match="height"):
            validate_request("text_to_image", body)
        body = dict(GOOD["text_to_image"], canvas={"width": 0, "height": 4})
        with pytest.raises(RequestError, match="width"):
            validate_request("text_to_image", body)

    def test_empty_prompt_rejected(self):
        body = dict(GOOD["text_to_image"], prompt="")
        with pytest.raises(RequestError, match="prompt"):
            validate_request("text_to_image", body)

    @pytest.mark.parametrize(
        "box", [[1, 2, 3], [3, 2, 1, 4], [1, 4, 3, 2], [1, 2, 3, "x"], "box"]
    )
    def test_bad_boxes_rejected(self, box):
        body = dict(GOOD["region_inpaint"], box=box)
        with pytest.raises(RequestError, match="box"):
            validate_request("region_inpaint", body)

    def test_detect_labels_must_be_non_empty(self):
        for labels in ([], [""], ["ok", 3], "cat"):
            body = dict(GOOD["detect"], labels=labels)
            with pytest.raises(RequestError, match="labels"):
                validate_request("detect", body)

    def test_segment_boxes_must_be_non_empty(self):
        body = dict(GOOD["segment"], boxes=[])
        with pytest.raises(RequestError, match="boxes"):
            validate_request("segment", body)

    def test_payload_shape(self):
        for payload in ({}, {"png_base64": ""}, {"png_base64": "aa", "junk": 1}, "img"):
            body = dict(GOOD["caption"], image=payload)
            with pytest.raises(RequestError):
                validate_request("caption", body)

    def test_payload_ref_optional_but_checked(self):
        body = dict(GOOD["caption"], image={"png_base64": "aa", "ref": {"id": "x"}})
        with pytest.raises(RequestError, match="ref"):
            validate_request("caption", body)
        ok = {
            "png_base64": "aa",
            "ref": {"id": "0" * 64, "width": 1, "height": 1, "storage_path": ""},
        }
        validate_request("caption", dict(GOOD["caption"], image=ok))

    def test_score_needs_text(self):
        body = dict(GOOD["score"])
        del body["text"]
        with pytest.raises(RequestError, match="text"):
            validate_request("score", body)
