"""Regenerate docs/examples/coco-export.json, the documented export example.

The example is built through the real library types and build_coco so it can
never drift from the code. It is pretty-printed for reading; on-disk exports
hold the same JSON value in canonical one-line form.

Run from the repository root:  python3 scripts/make_export_example.py [dest]
"""

import json
import sys
from pathlib import Path

import numpy as np

from synthpipe.backends.protocol import ImagePayload
from synthpipe.core import (
    AnnotationBundle,
    Box,
    DatasetRecord,
    DetectedObject,
    LineageStep,
    QualityReport,
    SegmentMask,
)
from synthpipe.store import DatasetManifest, build_coco

DEFAULT_DEST = Path(__file__).resolve().parent.parent / "docs" / "examples" / "coco-export.json"


def _retained(psnr, ssim, semantic, labels):
    return QualityReport(
        psnr=psnr,
        ssim=ssim,
        semantic_score=semantic,
        required_labels=labels,
        found_labels=labels,
        verdict="retain",
        reasons=(),
    )


def example_manifest() -> DatasetManifest:
    """Two retained records: a plain detection and a small maskable scene.

    The second image is deliberately tiny (32 px) so its run-length mask stays
    short enough to read in the example file.
    """
    field = ImagePayload.from_pixels(np.full((512, 512, 3), 17, dtype=np.uint8))
    harbor = ImagePayload.from_pixels(np.full((32, 32, 3), 140, dtype=np.uint8))

    cat = DetectedObject("cat", Box(343.23, 176.29, 467.23, 353.13), 0.88)
    bench = DetectedObject("bench", Box(36.59, 35.39, 232.3, 309.57), 0.9132)
    first = DatasetRecord(
        image=field.ref,
        annotations=AnnotationBundle(
            caption="there is a cat and a bench in a field.",
            objects=(cat, bench),
        ),
        lineage=(LineageStep(op="init", params={"seed": 9}, image_id=field.ref.id),),
        quality=_retained(None, None, 0.9132, ("cat",)),
    )

    crate_pixels = np.zeros((32, 32), dtype=bool)
    crate_pixels[8:24, 8:24] = True
    crate = DetectedObject("crate", Box(8.0, 8.0, 24.0, 24.0), 0.91)
    stray_cat = DetectedObject("cat", Box(2.0, 12.0, 14.0, 30.0), 0.5)
    second = DatasetRecord(
        image=harbor.ref,
        annotations=AnnotationBundle(
            caption="there is a crate and a cat in a harbor.",
            objects=(crate, stray_cat),
            masks=(SegmentMask.from_array(0, crate_pixels),),
        ),
        lineage=(
            LineageStep(op="init", params={"seed": 9}, image_id=field.ref.id),
            LineageStep(
                op="object-fill",
                params={"label": "crate", "seed": 11},
                image_id=harbor.ref.id,
            ),
        ),
        quality=_retained(23.7, 0.81, 0.87, ("crate",)),
    )

    return DatasetManifest(
        config={"label": "cat", "seed": 9},
        records=(first, second),
        rejected={"object_missing": 1},
    )


def main() -> None:
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_DEST
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(json.dumps(build_coco(example_manifest()), indent=2) + "\n", "utf-8")
    print(f"wrote {dest}")


if __name__ == "__main__":
    main()
