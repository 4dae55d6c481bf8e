"""Run-loop behavior: staging, lineage, filtering, determinism, replay."""

import pytest

from synthpipe.backends.client import BackendSet, ScriptedChatBackend
from synthpipe.backends.mock import make_mock_world
from synthpipe.backends.protocol import (
    CapabilityKind,
    DetectRequest,
    GenRequest,
    ScoreRequest,
)
from synthpipe.core import (
    AnnotationBundle,
    Box,
    DetectedObject,
    LabelWord,
    LineageStep,
    SceneSpec,
    derive_seed,
)
from synthpipe.geometry import iou
from synthpipe.pipeline import (
    InitBundle,
    Pipeline,
    PipelineConfig,
    default_endpoints,
    replay_lineage,
    run,
)
from synthpipe.prompts.parse import ParseError, parse_visual_features
from synthpipe.prompts.render import render_visual_descriptor
from synthpipe.store import DatasetStore, canonical_json

from .fixtures import (
    BENCH,
    CAT_BOX,
    CAT_RELATIONSHIP,
    CAT_RETURN_RESULT,
    DOG,
    FIELD_CAPTION,
    LEMUR_FEATURES_REPLY,
)

CREATOR_REPLY = "1. A red panda sitting on a bench in a field."
SCENES_REPLY = (
    "{'background': ['snowy hill'], 'objects': [['red panda', 'bench', 'cat']], "
    "'description': ['A red panda and a cat near a bench on a snowy hill.']}"
)


def mock_cfg(**overrides):
    settings = dict(label=LabelWord("red panda"), seed=42)
    settings.update(overrides)
    return PipelineConfig(**settings)


def scripted_pipeline(replies, cfg=None):
    cfg = cfg or mock_cfg()
    world = make_mock_world(cfg.seed)
    chat = ScriptedChatBackend(replies)
    backends = BackendSet(
        cfg.endpoints, world=world, overrides={CapabilityKind.CHAT: chat}
    )
    return Pipeline(cfg, backends=backends), world, chat


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"iterations": 0},
            {"scenes_per_iteration": 0},
            {"prompts_per_label": 0},
            {"candidates_per_prompt": 0},
            {"retry_budget": -1},
        ],
    )
    def test_counts_must_be_positive(self, kwargs):
        with pytest.raises(ValueError):
            mock_cfg(**kwargs)

    def test_endpoints_must_cover_every_capability(self):
        endpoints = default_endpoints()
        del endpoints[CapabilityKind.SEGMENT]
        with pytest.raises(ValueError, match="segment"):
            mock_cfg(endpoints=endpoints)

    def test_snapshot_is_json_serializable(self):
        snapshot = mock_cfg().snapshot()
        canonical_json(snapshot)
        assert snapshot["label"] == "red panda"
        assert snapshot["seed"] == 42
        assert snapshot["canvas"] == [512, 512]
        assert snapshot["chain_scenes"] is False
        assert list(snapshot["endpoints"]) == sorted(k.value for k in CapabilityKind)


@pytest.fixture(scope="module")
def mock_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    events = []
    manifest = run(mock_cfg(), out, progress=events.append)
    return manifest, out, events


class TestFullRun:
    def test_completes_within_record_budget(self, mock_run):
        manifest, _, _ = mock_run
        assert manifest.complete is True
        # one init decision plus iterations x scenes decisions
        assert 1 <= len(manifest.records) <= 3

    def test_init_record_shape(self, mock_run):
        manifest, _, _ = mock_run
        init = manifest.records[0]
        assert [step.op for step in init.lineage] == ["init"]
        assert init.lineage[0].image_id == init.image.id
        assert init.quality.psnr is None
        assert init.quality.required_labels == ("red panda",)
        assert "red panda" in init.quality.found_labels
        assert 0.0 < init.quality.semantic_score <= 1.0
        params = init.lineage[0].params
        assert set(params) == {"prompt", "seed", "count", "index", "canvas"}
        assert params["canvas"] == [512, 512]

    def test_scene_records_shape(self, mock_run):
        manifest, _, _ = mock_run
        assert len(manifest.records) > 1
        init = manifest.records[0]
        for record in manifest.records[1:]:
            ops = [step.op for step in record.lineage]
            assert ops[0] == "init"
            assert ops[1] == "background-edit"
            assert set(ops[2:]) <= {"object-fill"}
            assert record.lineage[0] == init.lineage[0]
            assert record.lineage[-1].image_id == record.image.id
            background = record.lineage[1].params["background"]
            assert record.quality.required_labels[0] == background
            assert "red panda" in record.quality.required_labels
            assert record.quality.psnr >= 20.0
            assert record.quality.ssim >= 0.75

    def test_edit_and_fill_seeds_are_derived(self, mock_run):
        manifest, _, _ = mock_run
        for scene_index, record in enumerate(manifest.records[1:]):
            edit = record.lineage[1]
            assert edit.params["seed"] == derive_seed(42, "background-edit", 0, scene_index)
            for fill_index, step in enumerate(record.lineage[2:]):
                assert step.params["seed"] == derive_seed(
                    42, "object-fill", 0, scene_index, fill_index
                )

    def test_images_stored_and_verifiable(self, mock_run):
        manifest, out, _ = mock_run
        store = DatasetStore(out)
        for record in manifest.records:
            assert record.image.storage_path == f"images/{record.image.id}.png"
            pixels = store.load_image(record.image.id)
            assert pixels.shape == (512, 512, 3)

    def test_manifest_round_trips_from_disk(self, mock_run):
        manifest, out, _ = mock_run
        paths = list((out / "manifests").glob("manifest-*.json"))
        assert len(paths) == 1
        assert DatasetStore.load_manifest(paths[0]) == manifest

    def test_rejection_reasons_use_known_vocabulary(self, mock_run):
        manifest, _, _ = mock_run
        assert set(manifest.rejected) <= {
            "psnr_below",
            "ssim_below",
            "object_missing",
            "semantic_below",
        }

    def test_progress_event_stream(self, mock_run):
        manifest, _, events = mock_run
        stages = [event["stage"] for event in events]
        assert stages[0] == "initialize"
        assert stages[-1] == "manifest"
        assert stages.count("scene") == 2
        assert events[-1]["retained"] == len(manifest.records)
        assert events[-1]["complete"] is True

    def test_rerun_is_bit_identical(self, mock_run, tmp_path):
        manifest, _, _ = mock_run
        again = run(mock_cfg(), tmp_path)
        assert again.run_hash == manifest.run_hash

    def test_seed_changes_the_dataset(self, mock_run, tmp_path):
        manifest, _, _ = mock_run
        other = run(mock_cfg(seed=43), tmp_path)
        assert other.run_hash != manifest.run_hash

    def test_every_record_replays_on_fresh_backends(self, mock_run):
        manifest, _, _ = mock_run
        # world seed only shapes brainstorming; image ops depend on request seeds
        backends = BackendSet.from_endpoints(default_endpoints(), seed=999)
        for record in manifest.records:
            final = replay_lineage(record.lineage, backends)
            assert final.ref.id == record.image.id


class TestChaining:
    def test_scene_lineages_accumulate(self, tmp_path):
        manifest = run(mock_cfg(chain_scenes=True), tmp_path)
        assert manifest.complete
        assert len(manifest.records) == 3
        first_scene = manifest.records[1]
        second_scene = manifest.records[2]
        prefix = len(first_scene.lineage)
        assert second_scene.lineage[:prefix] == first_scene.lineage
        assert second_scene.lineage[prefix].op == "background-edit"

    def test_chained_records_replay(self, tmp_path):
        manifest = run(mock_cfg(chain_scenes=True), tmp_path)
        backends = BackendSet.from_endpoints(default_endpoints(), seed=0)
        for record in manifest.records:
            assert replay_lineage(record.lineage, backends).ref.id == record.image.id


class TestInitialize:
    def test_best_scoring_candidate_wins(self):
        cfg = mock_cfg(candidates_per_prompt=3)
        pipeline, _, _ = scripted_pipeline([LEMUR_FEATURES_REPLY, CREATOR_REPLY], cfg)
        bundle = pipeline.initialize()

        prompt = "A red panda sitting on a bench in a field."
        assert bundle.prompt == prompt
        params = bundle.lineage[0].params
        assert params["prompt"] == prompt
        assert params["seed"] == derive_seed(42, "init-gen", 0)
        assert params["count"] == 3

        # independent re-ranking: regenerate the same candidates and score them
        reply = pipeline.backends.invoke(
            GenRequest(prompt=prompt, canvas=cfg.canvas, seed=params["seed"], count=3)
        )
        scores = [
            pipeline.backends.invoke(ScoreRequest(image=image, text=prompt)).score
            for image in reply.images
        ]
        best_index = max(range(3), key=lambda i: (scores[i], -i))
        assert params["index"] == best_index
        assert bundle.image.ref.id == reply.images[best_index].ref.id
        assert bundle.semantic_score == scores[best_index]

    def test_annotations_ground_the_label(self):
        pipeline, _, _ = scripted_pipeline([LEMUR_FEATURES_REPLY, CREATOR_REPLY])
        bundle = pipeline.initialize()
        assert bundle.annotations.caption == "there is a red panda and a bench in a field."
        labels = [obj.label for obj in bundle.annotations.objects]
        assert "red panda" in labels
        assert len(bundle.annotations.masks) == len(bundle.annotations.objects)

    def test_surplus_prompts_ignored(self):
        three = "1. A red panda in a field.\n2. A red panda in a forest.\n3. A red panda in a desert."
        pipeline, _, _ = scripted_pipeline(
            [LEMUR_FEATURES_REPLY, three], mock_cfg(prompts_per_label=2)
        )
        bundle = pipeline.initialize()
        assert bundle.prompt in {"A red panda in a field.", "A red panda in a forest."}


def field_bundle(world):
    image = world.invoke(
        CapabilityKind.TEXT_TO_IMAGE,
        GenRequest(prompt="a dog sitting on a bench in a field", canvas=mock_cfg().canvas, seed=1, count=1),
    ).images[0]
    annotations = AnnotationBundle(
        FIELD_CAPTION,
        (BENCH, DOG, DetectedObject("field", Box(0.0, 0.0, 512.0, 512.0), 0.9)),
    )
    return InitBundle(
        image=image,
        annotations=annotations,
        lineage=(LineageStep(op="init", image_id=image.ref.id),),
        prompt="a dog sitting on a bench in a field",
        semantic_score=1.0,
    )


class TestSceneStage:
    def test_imagine_scenes_grounds_on_foreground_only(self):
        pipeline, world, chat = scripted_pipeline([SCENES_REPLY])
        scenes = pipeline.imagine_scenes(field_bundle(world))
        assert len(scenes) == 1
        assert scenes[0].background == "snowy hill"
        message = chat.requests[0].prompt.messages[-1].content
        assert FIELD_CAPTION in message
        # the background detection must not be pitched as a scene object
        assert "consist bench, dog," in message
        assert "field," not in message.split("consist", 1)[1].split("and also")[0]

    def test_edit_background_records_instruction_and_seed(self):
        pipeline, world, _ = scripted_pipeline([])
        bundle = field_bundle(world)
        scene = SceneSpec("snowy hill", ("dog", "bench"), "A dog on a snowy hill.")
        edited, step = pipeline.edit_background(bundle.image, scene, iteration=2, scene_index=1)
        assert step.op == "background-edit"
        assert step.params["instruction"] == "change the background to snowy hill"
        assert step.params["seed"] == derive_seed(42, "background-edit", 2, 1)
        assert step.image_id == edited.ref.id
        assert world.image(edited.ref.id).background == "snowy hill"


class TestFillObjects:
    def scene(self, objects=("dog", "bench", "cat")):
        return SceneSpec("field", objects, "A cat sitting next to the dog on the field.")

    def test_applies_proposed_box_exactly(self):
        pipeline, world, chat = scripted_pipeline([CAT_RETURN_RESULT])
        bundle = field_bundle(world)
        final, applied, steps = pipeline.fill_objects(
            bundle.image, self.scene(), [BENCH, DOG], FIELD_CAPTION, iteration=1, scene_index=0
        )
        assert [candidate.label for candidate in applied] == ["cat"]
        assert applied[0].box == CAT_BOX
        assert len(steps) == 1
        assert steps[0].op == "object-fill"
        assert steps[0].params["box"] == [343.23, 176.29, 467.23, 353.13]
        assert steps[0].params["relationship"] == CAT_RELATIONSHIP
        assert steps[0].params["seed"] == derive_seed(42, "object-fill", 1, 0, 0)
        assert steps[0].image_id == final.ref.id

        detected = pipeline.backends.invoke(
            DetectRequest(image=final, labels=("cat",))
        ).objects
        assert len(detected) == 1
        assert iou(detected[0].box, CAT_BOX) >= 0.9

        message = chat.requests[0].prompt.messages[-1].content
        assert "make 1 possible prediction" in message
        assert "objects cat." in message

    def test_targets_already_present_skip_everything(self):
        pipeline, world, chat = scripted_pipeline(["should never be consumed"])
        bundle = field_bundle(world)
        final, applied, steps = pipeline.fill_objects(
            bundle.image, self.scene(("dog", "bench")), [BENCH, DOG], FIELD_CAPTION, 0, 0
        )
        assert final is bundle.image
        assert applied == []
        assert steps == []
        assert chat.requests == []

    def test_no_existing_layout_skips_fill(self):
        pipeline, world, chat = scripted_pipeline(["should never be consumed"])
        bundle = field_bundle(world)
        final, applied, steps = pipeline.fill_objects(
            bundle.image, self.scene(), [], FIELD_CAPTION, 0, 0
        )
        assert final is bundle.image
        assert (applied, steps, chat.requests) == ([], [], [])

    def test_rule_breaking_proposals_dropped_silently(self):
        oversized = '{"label": \'cat\', "box": [0, 0, 400, 400], "relationship": \'x\'}'
        pipeline, world, _ = scripted_pipeline([oversized])
        bundle = field_bundle(world)
        final, applied, steps = pipeline.fill_objects(
            bundle.image, self.scene(), [BENCH, DOG], FIELD_CAPTION, 0, 0
        )
        assert final.ref.id == bundle.image.ref.id
        assert applied == []
        assert steps == []

    def test_case_duplicate_targets_collapse(self):
        pipeline, world, chat = scripted_pipeline([CAT_RETURN_RESULT])
        bundle = field_bundle(world)
        _, applied, _ = pipeline.fill_objects(
            bundle.image, self.scene(("Dog", "cat", "Cat")), [BENCH, DOG], FIELD_CAPTION, 0, 0
        )
        assert [candidate.label for candidate in applied] == ["cat"]
        message = chat.requests[0].prompt.messages[-1].content
        assert "make 1 possible prediction" in message


class TestChatRetry:
    def test_reask_within_budget(self):
        pipeline, _, chat = scripted_pipeline(["\n\n", LEMUR_FEATURES_REPLY])
        features = pipeline._chat_parsed(
            render_visual_descriptor(LabelWord("Lemur")), parse_visual_features, "visual feature"
        )
        assert len(features.phrases) == 10
        assert len(chat.requests) == 2

    def test_budget_exhaustion_raises(self):
        pipeline, _, _ = scripted_pipeline(["\n\n", "\n\n"], mock_cfg(retry_budget=1))
        with pytest.raises(ParseError, match="after 2 attempts"):
            pipeline._chat_parsed(
                render_visual_descriptor(LabelWord("Lemur")),
                parse_visual_features,
                "visual feature",
            )

    def test_backend_failure_yields_incomplete_manifest(self, tmp_path):
        # chat script dries up after initialization: the run stops but persists
        pipeline, _, _ = scripted_pipeline(
            [LEMUR_FEATURES_REPLY, CREATOR_REPLY], mock_cfg(retry_budget=0)
        )
        events = []
        manifest = pipeline.run(tmp_path, progress=events.append)
        assert manifest.complete is False
        assert len(manifest.records) == 1
        assert any(event["stage"] == "error" for event in events)
        paths = list((tmp_path / "manifests").glob("manifest-*.json"))
        assert len(paths) == 1
        loaded = DatasetStore.load_manifest(paths[0])
        assert loaded.complete is False


class TestReplayLineage:
    def _backends(self):
        return BackendSet.from_endpoints(default_endpoints(), seed=0)

    def test_empty_lineage_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            replay_lineage((), self._backends())

    def test_tampered_image_id_detected(self, tmp_path):
        manifest = run(mock_cfg(), tmp_path)
        record = manifest.records[0]
        step = record.lineage[0]
        forged = LineageStep(op=step.op, params=step.params, image_id="0" * 64)
        with pytest.raises(ValueError, match="diverged at step 0"):
            replay_lineage((forged,), self._backends())

    def test_tampered_seed_detected(self, tmp_path):
        manifest = run(mock_cfg(), tmp_path)
        record = manifest.records[0]
        step = record.lineage[0]
        params = dict(step.params)
        params["seed"] = params["seed"] + 1
        forged = LineageStep(op=step.op, params=params, image_id=step.image_id)
        with pytest.raises(ValueError, match="diverged"):
            replay_lineage((forged,), self._backends())
