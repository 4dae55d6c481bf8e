"""Walk an image through every rule the quality gate applies.

Each stop shows one way an edited image can die: bad pixels, a vanished
required object, or weak image-text similarity. The gate never short
circuits, so a terrible edit lists everything wrong with it at once.

    python3 demos/quality_gate_tour.py
"""

import numpy as np

from synthpipe.backends.mock import make_mock_world
from synthpipe.backends.protocol import (
    CapabilityKind,
    DetectRequest,
    EditRequest,
    GenRequest,
    ScoreRequest,
)
from synthpipe.core import Canvas
from synthpipe.gate import GateThresholds, filter_decision, pixel_check, semantic_rank


def verdict_line(name: str, report) -> None:
    psnr = "inf" if report.psnr is None or report.psnr == float("inf") else f"{report.psnr:.2f}"
    ssim = "-" if report.ssim is None else f"{report.ssim:.3f}"
    reasons = ", ".join(report.reasons) if report.reasons else "clean"
    print(f"  {name:<18} psnr={psnr:<7} ssim={ssim:<6} -> {report.verdict} ({reasons})")


def main() -> None:
    world = make_mock_world(0)
    original = world.invoke(
        CapabilityKind.TEXT_TO_IMAGE,
        GenRequest(prompt="a red panda sitting on a bench in a field", canvas=Canvas(), seed=11),
    ).images[0]
    print("Base image: a red panda on a bench; the gate must keep the panda alive.\n")

    def judge(name, edited_pixels, image_for_detection):
        detections = world.invoke(
            CapabilityKind.DETECT,
            DetectRequest(image=image_for_detection, labels=("red panda",)),
        ).objects
        report = filter_decision(
            original.pixels, edited_pixels, detections, ["red panda"], semantic_score=None
        )
        verdict_line(name, report)
        return report

    # A well-behaved background swap: pixels move a little, the panda stays.
    clean = world.invoke(
        CapabilityKind.INSTRUCT_EDIT,
        EditRequest(image=original, instruction="change the background to snowy hill", seed=3),
    ).image
    judge("clean edit", clean.pixels, clean)

    # The same edit, but the detector no longer finds the panda afterwards.
    vanished = world.invoke(
        CapabilityKind.INSTRUCT_EDIT,
        EditRequest(image=original, instruction="change the background to autumn orchard", seed=4),
    ).image
    world.remove_object(vanished.ref.id, "red panda")
    judge("object erased", vanished.pixels, vanished)

    # An edit that trashed the pixels entirely: both metrics fail, and since
    # the noise is a foreign image the detector finds nothing either.
    rng = np.random.default_rng(5)
    noise = rng.integers(0, 256, original.pixels.shape, dtype=np.uint8)
    report = filter_decision(original.pixels, noise, [], ["red panda"], semantic_score=None)
    verdict_line("pure noise", report)

    # The identity edit is the easy upper bound: infinite PSNR, SSIM 1.
    verdict_line("identity edit", pixel_check(original.pixels, original.pixels.copy()))

    print("\nThresholds are configurable; demand near-lossless edits and the clean one dies too:")
    strict = GateThresholds(psnr_min=40.0)
    verdict_line("clean, strict", pixel_check(original.pixels, clean.pixels, strict))

    print("\nSemantic ranking picks the candidate that best matches the prompt:")
    prompt = "a red panda sitting on a bench in a field"
    candidates = world.invoke(
        CapabilityKind.TEXT_TO_IMAGE, GenRequest(prompt=prompt, canvas=Canvas(), seed=21, count=3)
    ).images

    def score(candidate, text):
        return world.invoke(
            CapabilityKind.SCORE, ScoreRequest(image=candidate, text=text)
        ).score

    best, best_score = semantic_rank(candidates, prompt, score, top_k=1)[0]
    print(f"  best of {len(candidates)} candidates: {best.ref.id[:12]} at similarity {best_score:.4f}")


if __name__ == "__main__":
    main()
