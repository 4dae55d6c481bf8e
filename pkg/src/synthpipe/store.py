"""On-disk dataset layout, canonical manifests, and COCO-style export.

Store layout under one root:

    images/     {image_id}.png, named by pixel-content hash
    manifests/  manifest-{run_hash12}.json, canonical JSON
    exports/    coco-{run_hash12}.json

Manifests are serialized canonically (sorted keys, tight separators, UTF-8
kept literal, NaN forbidden) and carry a run_hash over that canonical form,
so equality of run_hash means byte-equality of everything that matters and
any post-hoc edit of a manifest is detectable on load.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DatasetRecord, content_hash
from .backends.protocol import png_decode

__all__ = [
    "DatasetManifest",
    "DatasetStore",
    "StoreError",
    "build_coco",
    "canonical_json",
    "record_id",
]

MANIFEST_SCHEMA_VERSION = "1"


class StoreError(ValueError):
    """Manifest or image data on disk is missing, stale, or tampered with."""


def canonical_json(value) -> str:
    """The one JSON serialization used for hashing and on-disk manifests."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def record_id(record: DatasetRecord) -> str:
    """Stable identity of a record: its image plus its full derivation."""
    material = canonical_json(
        {"image_id": record.image.id, "lineage": [s.to_dict() for s in record.lineage]}
    )
    return content_hash(material.encode("utf-8"))


@dataclass(frozen=True)
class DatasetManifest:
    """Everything one run produced: config snapshot, records, reject tally."""

    config: dict
    records: tuple[DatasetRecord, ...]
    rejected: dict
    complete: bool = True
    schema_version: str = MANIFEST_SCHEMA_VERSION

    def body_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "complete": self.complete,
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "rejected": dict(self.rejected),
        }

    @property
    def run_hash(self) -> str:
        return content_hash(canonical_json(self.body_dict()).encode("utf-8"))

    def to_dict(self) -> dict:
        body = self.body_dict()
        body["run_hash"] = self.run_hash
        return body

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        if data.get("schema_version") != MANIFEST_SCHEMA_VERSION:
            raise StoreError(
                f"unsupported manifest schema_version {data.get('schema_version')!r}"
            )
        manifest = cls(
            config=dict(data["config"]),
            records=tuple(DatasetRecord.from_dict(r) for r in data["records"]),
            rejected=dict(data["rejected"]),
            complete=bool(data["complete"]),
        )
        claimed = data.get("run_hash")
        if claimed != manifest.run_hash:
            raise StoreError("manifest run_hash does not match its contents")
        return manifest


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class DatasetStore:
    """Filesystem-backed store for one or more runs."""

    def __init__(self, root):
        self.root = Path(root)
        self.images_dir = self.root / "images"
        self.manifests_dir = self.root / "manifests"
        self.exports_dir = self.root / "exports"
        for directory in (self.images_dir, self.manifests_dir, self.exports_dir):
            directory.mkdir(parents=True, exist_ok=True)
        self._records: dict[str, DatasetRecord] = {}

    # Records and images

    def image_path(self, image_id: str) -> Path:
        return self.images_dir / f"{image_id}.png"

    def put_record(self, record: DatasetRecord, image_png: bytes) -> tuple[str, DatasetRecord]:
        """Persist a retained record and its image; duplicate records deduplicate.

        Identity covers image plus lineage, so the same image reached along a
        different derivation stores a second record while the image file is
        written once.
        """
        if record.quality.verdict != "retain":
            raise StoreError("only retained records may be stored")
        if not record.annotations.caption.strip():
            raise StoreError("retained records must carry a caption")
        stored_ref = type(record.image)(
            id=record.image.id,
            width=record.image.width,
            height=record.image.height,
            storage_path=f"images/{record.image.id}.png",
        )
        record = DatasetRecord(
            image=stored_ref,
            annotations=record.annotations,
            lineage=record.lineage,
            quality=record.quality,
        )
        rid = record_id(record)
        if rid in self._records:
            return rid, self._records[rid]
        path = self.image_path(record.image.id)
        if not path.exists():
            _atomic_write(path, image_png)
        self._records[rid] = record
        return rid, record

    def load_image(self, image_id: str) -> np.ndarray:
        """Load and verify an image: its pixel hash must still match its id."""
        path = self.image_path(image_id)
        if not path.exists():
            raise StoreError(f"image {image_id} is missing from the store")
        pixels = png_decode(path.read_bytes())
        if content_hash(pixels.tobytes()) != image_id:
            raise StoreError(f"image {image_id} failed its integrity check")
        return pixels

    def records(self) -> tuple[DatasetRecord, ...]:
        return tuple(self._records.values())

    # Manifests

    def manifest_path(self, manifest: DatasetManifest) -> Path:
        return self.manifests_dir / f"manifest-{manifest.run_hash[:12]}.json"

    def save_manifest(self, manifest: DatasetManifest) -> Path:
        path = self.manifest_path(manifest)
        _atomic_write(path, (canonical_json(manifest.to_dict()) + "\n").encode("utf-8"))
        return path

    @staticmethod
    def load_manifest(path) -> DatasetManifest:
        raw = Path(path).read_text("utf-8")
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise StoreError(f"manifest is not valid JSON: {exc}") from exc
        return DatasetManifest.from_dict(data)

    # Export

    def export_coco(self, manifest: DatasetManifest, dest=None) -> Path:
        """Write a COCO-style export; every referenced image must exist on disk."""
        for record in manifest.records:
            if not self.image_path(record.image.id).exists():
                raise StoreError(
                    f"manifest references image {record.image.id} not present in the store"
                )
        if dest is None:
            dest = self.exports_dir / f"coco-{manifest.run_hash[:12]}.json"
        dest = Path(dest)
        dest.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(dest, (canonical_json(build_coco(manifest)) + "\n").encode("utf-8"))
        return dest


def build_coco(manifest: DatasetManifest) -> dict:
    """COCO-style dict: xywh boxes, RLE segmentations, stable category ids.

    Categories are numbered by first appearance across records; images and
    annotations get sequential 1-based ids in record order. Each image entry
    keeps its caption, and each annotation keeps the detector score.
    """
    categories: dict[str, int] = {}
    images = []
    annotations = []
    annotation_id = 1
    for image_id_num, record in enumerate(manifest.records, start=1):
        images.append(
            {
                "id": image_id_num,
                "file_name": f"{record.image.id}.png",
                "width": record.image.width,
                "height": record.image.height,
                "caption": record.annotations.caption,
            }
        )
        masks_by_box = {mask.box_index: mask for mask in record.annotations.masks}
        for box_index, obj in enumerate(record.annotations.objects):
            if obj.label not in categories:
                categories[obj.label] = len(categories) + 1
            # xyxy -> xywh; rounded so subtraction noise never leaks into the file
            bbox = [
                round(v, 2)
                for v in (obj.box.x1, obj.box.y1, obj.box.width, obj.box.height)
            ]
            entry = {
                "id": annotation_id,
                "image_id": image_id_num,
                "category_id": categories[obj.label],
                "bbox": bbox,
                "area": round(obj.box.area, 2),
                "iscrowd": 0,
                "score": obj.score,
            }
            mask = masks_by_box.get(box_index)
            if mask is not None:
                entry["segmentation"] = {
                    "size": [mask.height, mask.width],
                    "counts": list(mask.counts),
                }
            annotations.append(entry)
            annotation_id += 1
    return {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": cid, "name": name} for name, cid in categories.items()],
    }
