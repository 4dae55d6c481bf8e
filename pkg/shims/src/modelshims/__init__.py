"""Single-capability HTTP inference servers for the image-pipeline protocol.

Each process serves one capability (text_to_image, instruct_edit,
region_inpaint, detect, segment, caption, or score) behind the versioned
JSON-over-HTTP wire contract, plus a /healthz probe. Models are looked up in
a registry by identifier, and the bundled "reference" models run the whole
protocol deterministically on CPU.
"""

from .models import (
    ModelLoadError,
    ShimConfig,
    available_models,
    load_model,
    register_model,
)
from .server import build_app, serve
from .wire import CAPABILITIES, ROUTES, SCHEMA_VERSION

__all__ = [
    "CAPABILITIES",
    "ModelLoadError",
    "ROUTES",
    "SCHEMA_VERSION",
    "ShimConfig",
    "available_models",
    "build_app",
    "load_model",
    "register_model",
    "serve",
]

__version__ = "0.1.0"
