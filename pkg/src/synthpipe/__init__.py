"""synthpipe: grow an annotated synthetic image dataset from one label word.

The pipeline brainstorms scene prompts with a chat backend, generates and
edits images through pluggable HTTP backends (or a deterministic in-process
mock world), pseudo-annotates every image with detection, segmentation, and
captioning capabilities, and gates the results with pixel- and semantic-level
filtering rules before anything lands in the dataset store.
"""

from .core import (
    AnnotationBundle,
    Box,
    BoxCandidate,
    Canvas,
    DatasetRecord,
    DetectedObject,
    ImageRef,
    LabelWord,
    LineageStep,
    QualityReport,
    SceneSpec,
    SegmentMask,
    VisualFeature,
    content_hash,
    derive_seed,
)
from .gate import GateThresholds
from .geometry import BoxRules
from .metrics import MetricParams
from .pipeline import InitBundle, Pipeline, PipelineConfig, replay_lineage, run
from .store import DatasetManifest, DatasetStore

__all__ = [
    "AnnotationBundle",
    "Box",
    "BoxCandidate",
    "BoxRules",
    "Canvas",
    "DatasetManifest",
    "DatasetRecord",
    "DatasetStore",
    "DetectedObject",
    "GateThresholds",
    "ImageRef",
    "InitBundle",
    "LabelWord",
    "LineageStep",
    "MetricParams",
    "Pipeline",
    "PipelineConfig",
    "QualityReport",
    "SceneSpec",
    "SegmentMask",
    "VisualFeature",
    "content_hash",
    "derive_seed",
    "replay_lineage",
    "run",
]

__version__ = "0.1.0"
