"""Command line entry points: run a pipeline, inspect a record, export COCO.

Exit codes: 0 on success, 1 for usage or config errors, 2 when a run aborted
partway and left a manifest flagged incomplete.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .core import LabelWord
from .pipeline import Pipeline
from .store import DatasetStore, StoreError, record_id

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthpipe",
        description="Grow an annotated synthetic image dataset from a single label word.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="execute a pipeline run")
    run_parser.add_argument("--config", required=True, help="TOML run configuration")
    run_parser.add_argument("--label", help="override the config label word")
    run_parser.add_argument("--seed", type=int, help="override the run seed")
    run_parser.add_argument("--iterations", type=int, help="override the iteration count")
    run_parser.add_argument("--out", help="output dataset directory")

    inspect_parser = sub.add_parser("inspect", help="show one record of a manifest")
    inspect_parser.add_argument("manifest", help="path to a manifest JSON file")
    inspect_parser.add_argument("record", help="record id (prefix allowed)")

    export_parser = sub.add_parser("export", help="export a manifest to COCO JSON")
    export_parser.add_argument("manifest", help="path to a manifest JSON file")
    export_parser.add_argument("--dest", help="output file (default: exports/ next to the manifest)")
    return parser


def _progress_printer(event: dict) -> None:
    stage = event.get("stage")
    if stage == "initialize":
        print(
            f'stage=initialize label="{event["label"]}" '
            f'image={event["image_id"][:12]} verdict={event["verdict"]}'
        )
    elif stage == "scene":
        reasons = ",".join(event["reasons"])
        line = (
            f'stage=scene iteration={event["iteration"]} scene={event["scene"]} '
            f'background="{event["background"]}" applied={event["applied"]} '
            f'verdict={event["verdict"]}'
        )
        if reasons:
            line += f" reasons={reasons}"
        print(line)
    elif stage == "error":
        print(f'stage=error message="{event["message"]}"', file=sys.stderr)


def _cmd_run(args) -> int:
    try:
        settings = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    cfg = settings.config
    try:
        if args.label is not None:
            cfg = replace(cfg, label=LabelWord(args.label))
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.iterations is not None:
            cfg = replace(cfg, iterations=args.iterations)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out_dir = args.out or settings.out_dir
    if out_dir is None:
        print("config error: no output directory (set out in the config or pass --out)", file=sys.stderr)
        return 1

    manifest = Pipeline(cfg).run(out_dir, progress=_progress_printer)
    rejected_total = sum(manifest.rejected.values())
    print(f"summary retained={len(manifest.records)}")
    print(f"summary rejected={rejected_total}")
    for reason, count in manifest.rejected.items():
        print(f"summary rejected.{reason}={count}")
    store = DatasetStore(out_dir)
    print(f"manifest={store.manifest_path(manifest)}")
    return 0 if manifest.complete else 2


def _cmd_inspect(args) -> int:
    try:
        manifest = DatasetStore.load_manifest(args.manifest)
    except (OSError, StoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    by_id = {record_id(record): record for record in manifest.records}
    matches = [rid for rid in by_id if rid.startswith(args.record)]
    if len(matches) != 1:
        print(
            f"error: record {args.record!r} "
            + ("is ambiguous" if matches else "not found")
            + "; valid ids:",
            file=sys.stderr,
        )
        for rid in by_id:
            print(f"  {rid}", file=sys.stderr)
        return 1
    record = by_id[matches[0]]
    print(f"record {matches[0]}")
    print(f'image {record.image.id} {record.image.width}x{record.image.height} path={record.image.storage_path}')
    print(f'caption "{record.annotations.caption}"')
    print(f"lineage ({len(record.lineage)} steps)")
    for step in record.lineage:
        keys = {k: v for k, v in step.params.items() if k != "canvas"}
        print(f"  {step.op} -> {step.image_id[:12]} {keys}")
    print(f"objects ({len(record.annotations.objects)})")
    for obj in record.annotations.objects:
        coords = ", ".join(f"{c:.2f}" for c in obj.box.as_tuple())
        print(f'  "{obj.label}" score={obj.score:.2f} box=[{coords}]')
    quality = record.quality
    psnr = "none" if quality.psnr is None else f"{quality.psnr:.4f}"
    ssim = "none" if quality.ssim is None else f"{quality.ssim:.4f}"
    semantic = "none" if quality.semantic_score is None else f"{quality.semantic_score:.4f}"
    print(f"quality verdict={quality.verdict} psnr={psnr} ssim={ssim} semantic={semantic}")
    return 0


def _cmd_export(args) -> int:
    manifest_path = Path(args.manifest)
    try:
        manifest = DatasetStore.load_manifest(manifest_path)
        store = DatasetStore(manifest_path.parent.parent)
        dest = store.export_coco(manifest, dest=args.dest)
    except (OSError, StoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"export={dest}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "inspect":
        return _cmd_inspect(args)
    return _cmd_export(args)


if __name__ == "__main__":
    sys.exit(main())
