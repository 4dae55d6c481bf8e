"""Command line entry point: one process, one capability, one model.

Exit codes: 2 for unusable configuration (including a model identifier the
registry cannot load -- checked before any socket is bound), 0 when the
server shuts down cleanly.
"""

from __future__ import annotations

import argparse
import sys

from .models import ModelLoadError, ShimConfig, load_model
from .server import serve
from .wire import CAPABILITIES, ROUTES


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modelshim",
        description="Serve one inference capability over HTTP.",
    )
    parser.add_argument(
        "--capability",
        required=True,
        choices=sorted(CAPABILITIES),
        help="which capability this process serves",
    )
    parser.add_argument(
        "--model",
        default="reference",
        help="model identifier to load (default: reference)",
    )
    parser.add_argument(
        "--device",
        default="cpu",
        help="device hint passed to the model (default: cpu)",
    )
    parser.add_argument("--port", required=True, type=int, help="TCP port to listen on")
    parser.add_argument(
        "--host",
        default="127.0.0.1",
        help="interface to bind (default: 127.0.0.1)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = ShimConfig(
            capability=args.capability,
            model=args.model,
            device=args.device,
            port=args.port,
        )
        model = load_model(config)
    except (ModelLoadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"serving {config.capability} (model={config.model}, device={config.device}) "
        f"on http://{args.host}:{config.port}{ROUTES[config.capability]}",
        flush=True,
    )
    serve(config, model=model, host=args.host)
    return 0


if __name__ == "__main__":
    sys.exit(main())
