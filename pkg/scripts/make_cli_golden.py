"""Freeze the reference run's CLI transcript and manifest hash.

Writes two goldens under tests/goldens/:

  cli_run_transcript.txt  stdout of `synthpipe run` for the reference
                          configuration (label "red panda", seed 42, mock
                          backends), with the output directory replaced by
                          the <out> placeholder
  run_hash.txt            the full run_hash of the manifest that run writes

Both pin end-to-end determinism: any change to prompts, brainstorming,
image synthesis, gating, or serialization shows up here first. Regenerate
only for a deliberate behavior change.

Run from the repository root:  python3 scripts/make_cli_golden.py
"""

import contextlib
import io
import tempfile
from pathlib import Path

from synthpipe.cli import main
from synthpipe.store import DatasetStore

GOLDENS = Path(__file__).resolve().parent.parent / "tests" / "goldens"
CONFIG = 'label = "red panda"\nseed = 42\n'


def run_reference() -> tuple[str, str]:
    """Execute the reference run in a scratch directory.

    Returns (normalized stdout, full run hash).
    """
    with tempfile.TemporaryDirectory() as scratch:
        config_path = Path(scratch) / "run.toml"
        config_path.write_text(CONFIG, "utf-8")
        out_dir = Path(scratch) / "out"
        stdout = io.StringIO()
        with contextlib.redirect_stdout(stdout):
            code = main(["run", "--config", str(config_path), "--out", str(out_dir)])
        if code != 0:
            raise SystemExit(f"reference run exited {code}")
        transcript = stdout.getvalue().replace(str(out_dir), "<out>")
        manifests = sorted((out_dir / "manifests").glob("manifest-*.json"))
        manifest = DatasetStore.load_manifest(manifests[0])
        return transcript, manifest.run_hash


def main_script() -> None:
    transcript, run_hash = run_reference()
    GOLDENS.mkdir(parents=True, exist_ok=True)
    (GOLDENS / "cli_run_transcript.txt").write_text(transcript, "utf-8")
    (GOLDENS / "run_hash.txt").write_text(run_hash + "\n", "utf-8")
    print(f"run_hash {run_hash}")
    print(f"wrote goldens under {GOLDENS}")


if __name__ == "__main__":
    main_script()
