"""The run loop: one label word in, an annotated synthetic dataset out.

A run brainstorms visual features and scene prompts for the label through the
chat backend, generates candidate images and keeps the best-scoring one,
annotates it (caption, boxes, masks), then loops: brainstorm scene
variations, swap the background with an instruct-edit, fill new objects with
region inpainting at chat-proposed box placements, re-annotate, and let the
filtering rules decide what enters the dataset. Every image-producing call
gets a seed derived from (run seed, stage, indices), so a run is replayable
end to end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .backends.client import BackendEndpoint, BackendError, BackendSet
from .backends.protocol import (
    CapabilityKind,
    CaptionRequest,
    ChatRequest,
    DetectRequest,
    EditRequest,
    GenRequest,
    ImagePayload,
    InpaintRequest,
    ScoreRequest,
    SegmentRequest,
)
from .core import (
    AnnotationBundle,
    Box,
    Canvas,
    DatasetRecord,
    LabelWord,
    LineageStep,
    SceneSpec,
    derive_seed,
)
from .gate import GateThresholds, filter_decision, semantic_rank
from .geometry import BoxRules, filter_overlapping
from .metrics import MetricParams
from .prompts.parse import (
    ParseError,
    extract_entities,
    parse_box_candidates,
    parse_generation_prompts,
    parse_scene_specs,
    parse_visual_features,
)
from .prompts.render import (
    default_demonstration,
    render_aigc_creator,
    render_box_candidates,
    render_scene_imagination,
    render_visual_descriptor,
)
from .store import DatasetManifest, DatasetStore

__all__ = [
    "InitBundle",
    "Pipeline",
    "PipelineConfig",
    "default_endpoints",
    "replay_lineage",
    "run",
]


def default_endpoints() -> dict[CapabilityKind, BackendEndpoint]:
    """Every capability served by the in-process mock world."""
    return {
        kind: BackendEndpoint(kind=kind, base_url="mock:", timeout=5.0, max_retries=0)
        for kind in CapabilityKind
    }


@dataclass(frozen=True)
class PipelineConfig:
    label: LabelWord
    iterations: int = 1
    scenes_per_iteration: int = 2
    prompts_per_label: int = 1
    candidates_per_prompt: int = 2
    canvas: Canvas = field(default_factory=Canvas)
    box_rules: BoxRules = field(default_factory=BoxRules)
    thresholds: GateThresholds = field(default_factory=GateThresholds)
    metric_params: MetricParams = field(default_factory=MetricParams)
    seed: int = 0
    endpoints: Mapping[CapabilityKind, BackendEndpoint] = field(default_factory=default_endpoints)
    retry_budget: int = 2
    chain_scenes: bool = False

    def __post_init__(self) -> None:
        for name in ("iterations", "scenes_per_iteration", "prompts_per_label", "candidates_per_prompt"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.retry_budget < 0:
            raise ValueError("retry_budget must be non-negative")
        missing = [kind.value for kind in CapabilityKind if kind not in self.endpoints]
        if missing:
            raise ValueError(f"endpoints must cover every capability, missing: {missing}")

    def snapshot(self) -> dict:
        """Plain-dict view of the config for embedding into a manifest."""
        return {
            "label": self.label.text,
            "iterations": self.iterations,
            "scenes_per_iteration": self.scenes_per_iteration,
            "prompts_per_label": self.prompts_per_label,
            "candidates_per_prompt": self.candidates_per_prompt,
            "canvas": [self.canvas.width, self.canvas.height],
            "box_rules": {
                "min_side": self.box_rules.min_side,
                "max_side": self.box_rules.max_side,
                "iou_max": self.box_rules.iou_max,
            },
            "thresholds": {
                "psnr_min": self.thresholds.psnr_min,
                "ssim_min": self.thresholds.ssim_min,
                "sim_top_k": self.thresholds.sim_top_k,
                "detect_conf_min": self.thresholds.detect_conf_min,
                "semantic_min": self.thresholds.semantic_min,
            },
            "metric_params": {
                "bit_depth_max": self.metric_params.bit_depth_max,
                "ssim_window": self.metric_params.ssim_window,
                "ssim_sigma": self.metric_params.ssim_sigma,
                "k1": self.metric_params.k1,
                "k2": self.metric_params.k2,
            },
            "seed": self.seed,
            "retry_budget": self.retry_budget,
            "chain_scenes": self.chain_scenes,
            "endpoints": {kind.value: ep.base_url for kind, ep in sorted(self.endpoints.items(), key=lambda kv: kv[0].value)},
        }


@dataclass(frozen=True)
class InitBundle:
    """The base image a run builds on, with its annotations and lineage.

    lineage holds every step that produced the image, so a bundle built from
    a chained scene carries that scene's full derivation forward.
    """

    image: ImagePayload
    annotations: AnnotationBundle
    lineage: tuple[LineageStep, ...]
    prompt: str
    semantic_score: float


def _dedup(labels: Sequence[str]) -> list[str]:
    seen = set()
    out = []
    for label in labels:
        key = " ".join(label.casefold().split())
        if key and key not in seen:
            seen.add(key)
            out.append(label)
    return out


def _foreground(annotations: AnnotationBundle):
    """Detections minus the background one (a caption's 'in a ...' phrase).

    The background is annotated like any other region, but it must not count
    as an object when proposing placements or checking scene requirements:
    scenes replace it on purpose.
    """
    background, _ = extract_entities(annotations.caption)
    key = background or ""
    return tuple(
        obj
        for obj in annotations.objects
        if " ".join(obj.label.casefold().split()) != key
    )


class Pipeline:
    """One configured run; all backend traffic flows through self.backends."""

    def __init__(self, cfg: PipelineConfig, backends: BackendSet | None = None):
        self.cfg = cfg
        if backends is None:
            backends = BackendSet.from_endpoints(cfg.endpoints, cfg.seed)
        backends.require(list(CapabilityKind))
        self.backends = backends

    # Backend helpers

    def _chat_parsed(self, prompt, parser: Callable, what: str):
        """Invoke chat and parse the reply, re-asking up to the retry budget."""
        budget = self.cfg.retry_budget
        last_error: ParseError | None = None
        for _ in range(budget + 1):
            reply = self.backends.invoke(ChatRequest(prompt))
            try:
                return parser(reply.text)
            except ParseError as exc:
                last_error = exc
        raise ParseError(
            f"{what} reply stayed unparseable after {budget + 1} attempts: {last_error}"
        )

    def _score(self, image: ImagePayload, text: str) -> float:
        return self.backends.invoke(ScoreRequest(image=image, text=text)).score

    def _annotate(self, image: ImagePayload, extra_labels: Sequence[str]) -> AnnotationBundle:
        caption = self.backends.invoke(CaptionRequest(image=image)).caption
        background, entities = extract_entities(caption)
        queries = _dedup(list(entities) + ([background] if background else []) + list(extra_labels))
        objects = ()
        masks = ()
        if queries:
            objects = self.backends.invoke(
                DetectRequest(image=image, labels=tuple(queries))
            ).objects
        if objects:
            masks = self.backends.invoke(
                SegmentRequest(image=image, boxes=tuple(o.box for o in objects))
            ).masks
        return AnnotationBundle(caption=caption, objects=objects, masks=masks)

    # Stages

    def initialize(self) -> InitBundle:
        """Brainstorm prompts for the label, generate candidates, keep the best.

        Candidate images are ranked by the score capability against their own
        generation prompt; ties keep input order. The winner is captioned,
        detected, and segmented to become the base annotation bundle.
        """
        cfg = self.cfg
        features = self._chat_parsed(
            render_visual_descriptor(cfg.label), parse_visual_features, "visual feature"
        )
        creator_prompt = render_aigc_creator(
            cfg.label, features, cfg.prompts_per_label, demonstrations=(default_demonstration(),)
        )
        prompts = self._chat_parsed(creator_prompt, parse_generation_prompts, "scene prompt")
        prompts = prompts[: cfg.prompts_per_label]

        best: tuple[ImagePayload, float, str, dict] | None = None
        for prompt_index, prompt_text in enumerate(prompts):
            seed = derive_seed(cfg.seed, "init-gen", prompt_index)
            reply = self.backends.invoke(
                GenRequest(
                    prompt=prompt_text,
                    canvas=cfg.canvas,
                    seed=seed,
                    count=cfg.candidates_per_prompt,
                )
            )
            ranked = semantic_rank(
                reply.images,
                prompt_text,
                lambda image, text: self._score(image, text),
                top_k=cfg.thresholds.sim_top_k,
            )
            candidate, score = ranked[0]
            if best is None or score > best[1]:
                index = reply.images.index(candidate)
                params = {
                    "prompt": prompt_text,
                    "seed": seed,
                    "count": cfg.candidates_per_prompt,
                    "index": index,
                    "canvas": [cfg.canvas.width, cfg.canvas.height],
                }
                best = (candidate, score, prompt_text, params)

        image, score, prompt_text, params = best
        annotations = self._annotate(image, [cfg.label.text])
        lineage = (LineageStep(op="init", params=params, image_id=image.ref.id),)
        return InitBundle(
            image=image,
            annotations=annotations,
            lineage=lineage,
            prompt=prompt_text,
            semantic_score=score,
        )

    def imagine_scenes(self, bundle: InitBundle) -> list[SceneSpec]:
        """Ask chat for scene variations grounded in the bundle's annotations."""
        cfg = self.cfg
        exist = _dedup([obj.label for obj in _foreground(bundle.annotations)]) or [cfg.label.text]
        prompt = render_scene_imagination(
            bundle.annotations.caption, exist, cfg.scenes_per_iteration
        )
        scenes = self._chat_parsed(prompt, parse_scene_specs, "scene imagination")
        return scenes[: cfg.scenes_per_iteration]

    def edit_background(
        self, base: ImagePayload, scene: SceneSpec, iteration: int, scene_index: int
    ) -> tuple[ImagePayload, LineageStep]:
        """Swap the base image's background for the scene's, keeping objects."""
        instruction = f"change the background to {scene.background}"
        seed = derive_seed(self.cfg.seed, "background-edit", iteration, scene_index)
        reply = self.backends.invoke(EditRequest(image=base, instruction=instruction, seed=seed))
        step = LineageStep(
            op="background-edit",
            params={"instruction": instruction, "background": scene.background, "seed": seed},
            image_id=reply.image.ref.id,
        )
        return reply.image, step

    def fill_objects(
        self,
        base: ImagePayload,
        scene: SceneSpec,
        existing,
        caption: str,
        iteration: int,
        scene_index: int,
    ):
        """Inpaint the scene's new objects at chat-proposed, rule-checked boxes.

        Targets are the scene objects not already present among existing
        detections; one box is requested per target. Proposals that fail the
        size or overlap rules are dropped silently; zero applied fills is a
        valid outcome. Returns (final image, applied candidates, steps).
        """
        cfg = self.cfg
        existing_keys = {" ".join(obj.label.casefold().split()) for obj in existing}
        targets = _dedup(
            [o for o in scene.objects if " ".join(o.casefold().split()) not in existing_keys]
        )
        # No targets means nothing to add; no existing boxes means no layout
        # to anchor predictions on, so the fill stage is skipped either way.
        if not targets or not existing:
            return base, [], []
        prompt = render_box_candidates(
            caption, tuple(existing), targets, prompt_number=len(targets), canvas=cfg.canvas
        )
        parsed = self._chat_parsed(prompt, parse_box_candidates, "box candidate")
        retained, _rejected = filter_overlapping(
            parsed.candidates, [obj.box for obj in existing], cfg.box_rules
        )
        current = base
        steps: list[LineageStep] = []
        applied = []
        for fill_index, candidate in enumerate(retained):
            seed = derive_seed(cfg.seed, "object-fill", iteration, scene_index, fill_index)
            reply = self.backends.invoke(
                InpaintRequest(image=current, box=candidate.box, label=candidate.label, seed=seed)
            )
            current = reply.image
            steps.append(
                LineageStep(
                    op="object-fill",
                    params={
                        "label": candidate.label,
                        "box": candidate.box.to_list(),
                        "relationship": candidate.relationship,
                        "seed": seed,
                    },
                    image_id=current.ref.id,
                )
            )
            applied.append(candidate)
        return current, applied, steps

    def relabel(self, image: ImagePayload, extra_labels: Sequence[str]) -> AnnotationBundle:
        """Re-caption, re-detect, and re-segment so annotations match final pixels."""
        return self._annotate(image, extra_labels)

    # The loop

    def run(self, out_dir, progress: Callable[[dict], None] | None = None) -> DatasetManifest:
        """Run the full loop and persist everything under out_dir.

        An unrecoverable backend or parse failure stops the run; whatever was
        stored so far is written out in a manifest flagged incomplete.
        """
        cfg = self.cfg
        store = DatasetStore(out_dir)
        notify = progress or (lambda event: None)
        records: list[DatasetRecord] = []
        rejected: dict[str, int] = {}
        complete = True

        def reject(reasons) -> None:
            for reason in reasons:
                rejected[reason] = rejected.get(reason, 0) + 1

        try:
            bundle = self.initialize()
            init_report = filter_decision(
                original=None,
                edited_pixels=bundle.image.pixels,
                detections=bundle.annotations.objects,
                required_labels=[cfg.label.text],
                semantic_score=bundle.semantic_score,
                thresholds=cfg.thresholds,
                params=cfg.metric_params,
            )
            init_record = DatasetRecord(
                image=bundle.image.ref,
                annotations=bundle.annotations,
                lineage=bundle.lineage,
                quality=init_report,
            )
            if init_report.verdict == "retain":
                _, stored = store.put_record(init_record, bundle.image.png)
                records.append(stored)
            else:
                reject(init_report.reasons)
            notify(
                {
                    "stage": "initialize",
                    "label": cfg.label.text,
                    "image_id": bundle.image.ref.id,
                    "verdict": init_report.verdict,
                }
            )

            existing = _foreground(bundle.annotations)
            init_labels = _dedup([obj.label for obj in existing])
            for iteration in range(cfg.iterations):
                scenes = self.imagine_scenes(bundle)
                for scene_index, scene in enumerate(scenes):
                    edited, edit_step = self.edit_background(
                        bundle.image, scene, iteration, scene_index
                    )
                    final, applied, fill_steps = self.fill_objects(
                        edited,
                        scene,
                        existing,
                        bundle.annotations.caption,
                        iteration,
                        scene_index,
                    )
                    applied_labels = [candidate.label for candidate in applied]
                    annotations = self.relabel(
                        final, [cfg.label.text] + init_labels + applied_labels
                    )
                    required = _dedup(
                        [scene.background, cfg.label.text] + init_labels + applied_labels
                    )
                    semantic = self._score(final, scene.description)
                    report = filter_decision(
                        original=bundle.image.pixels,
                        edited_pixels=final.pixels,
                        detections=annotations.objects,
                        required_labels=required,
                        semantic_score=semantic,
                        thresholds=cfg.thresholds,
                        params=cfg.metric_params,
                    )
                    record = DatasetRecord(
                        image=final.ref,
                        annotations=annotations,
                        lineage=(*bundle.lineage, edit_step, *fill_steps),
                        quality=report,
                    )
                    if report.verdict == "retain":
                        _, stored = store.put_record(record, final.png)
                        records.append(stored)
                    else:
                        reject(report.reasons)
                    notify(
                        {
                            "stage": "scene",
                            "iteration": iteration,
                            "scene": scene_index,
                            "background": scene.background,
                            "applied": len(applied),
                            "verdict": report.verdict,
                            "reasons": list(report.reasons),
                        }
                    )
                    if cfg.chain_scenes and report.verdict == "retain":
                        # Later scenes derive from this image, so they must
                        # carry its full lineage, not just the init step.
                        bundle = InitBundle(
                            image=final,
                            annotations=annotations,
                            lineage=record.lineage,
                            prompt=bundle.prompt,
                            semantic_score=semantic,
                        )
                        existing = _foreground(annotations)
                        init_labels = _dedup([obj.label for obj in existing])
        except (BackendError, ParseError) as exc:
            complete = False
            notify({"stage": "error", "message": str(exc)})

        manifest = DatasetManifest(
            config=cfg.snapshot(),
            records=tuple(records),
            rejected=dict(sorted(rejected.items())),
            complete=complete,
        )
        path = store.save_manifest(manifest)
        notify(
            {
                "stage": "manifest",
                "path": str(path),
                "retained": len(records),
                "rejected": dict(sorted(rejected.items())),
                "complete": complete,
            }
        )
        return manifest


def run(cfg: PipelineConfig, out_dir, progress=None) -> DatasetManifest:
    """Convenience wrapper: build a Pipeline and run it."""
    return Pipeline(cfg).run(out_dir, progress=progress)


def replay_lineage(
    lineage: Sequence[LineageStep], backends: BackendSet, canvas: Canvas | None = None
) -> ImagePayload:
    """Re-execute a record's derivation and verify each step's image id.

    With deterministic backends (the mock world, or any backend honoring
    seeds) this reproduces the stored image exactly; an id mismatch at any
    step raises ValueError naming the step.
    """
    current: ImagePayload | None = None
    for step_index, step in enumerate(lineage):
        params = step.params
        if step.op == "init":
            size = params.get("canvas")
            gen_canvas = Canvas(int(size[0]), int(size[1])) if size else (canvas or Canvas())
            reply = backends.invoke(
                GenRequest(
                    prompt=str(params["prompt"]),
                    canvas=gen_canvas,
                    seed=int(params["seed"]),
                    count=int(params.get("count", 1)),
                )
            )
            current = reply.images[int(params.get("index", 0))]
        elif step.op == "background-edit":
            reply = backends.invoke(
                EditRequest(
                    image=current, instruction=str(params["instruction"]), seed=int(params["seed"])
                )
            )
            current = reply.image
        elif step.op == "object-fill":
            reply = backends.invoke(
                InpaintRequest(
                    image=current,
                    box=Box.from_list(params["box"]),
                    label=str(params["label"]),
                    seed=int(params["seed"]),
                )
            )
            current = reply.image
        else:
            raise ValueError(f"unknown lineage op {step.op!r}")
        if current.ref.id != step.image_id:
            raise ValueError(
                f"lineage replay diverged at step {step_index} ({step.op}): "
                f"expected {step.image_id[:12]}, got {current.ref.id[:12]}"
            )
    if current is None:
        raise ValueError("lineage is empty")
    return current
