"""TOML run configuration: strict keys, defaults for whole omitted blocks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .backends.client import BackendEndpoint
from .backends.protocol import CapabilityKind
from .core import Canvas, LabelWord
from .gate import GateThresholds
from .geometry import BoxRules
from .metrics import MetricParams
from .pipeline import PipelineConfig, default_endpoints

__all__ = ["ConfigError", "RunSettings", "load_config", "parse_config"]


class ConfigError(ValueError):
    """The config file is unreadable or contains unknown or invalid keys."""


@dataclass(frozen=True)
class RunSettings:
    config: PipelineConfig
    out_dir: str | None


class _Section:
    """One table of the config with take-and-complain-about-leftovers access."""

    def __init__(self, name: str, data: dict):
        if not isinstance(data, dict):
            raise ConfigError(f"config section {name!r} must be a table")
        self.name = name
        self.data = dict(data)

    def take(self, key: str, kind, default):
        if key not in self.data:
            return default
        value = self.data.pop(key)
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or (kind in (int, float) and isinstance(value, bool)):
            raise ConfigError(
                f"config key {self._path(key)} must be {kind.__name__}, got {type(value).__name__}"
            )
        return value

    def subtable(self, key: str) -> dict | None:
        if key not in self.data:
            return None
        value = self.data.pop(key)
        if not isinstance(value, dict):
            raise ConfigError(f"config key {self._path(key)} must be a table")
        return value

    def finish(self) -> None:
        if self.data:
            unknown = ", ".join(sorted(self._path(k) for k in self.data))
            raise ConfigError(f"unknown config keys: {unknown}")

    def _path(self, key: str) -> str:
        return f"{self.name}.{key}" if self.name else key


def _parse_endpoint(kind: CapabilityKind, value) -> BackendEndpoint:
    if isinstance(value, str):
        return BackendEndpoint(kind=kind, base_url=value)
    if isinstance(value, dict):
        section = _Section(f"endpoints.{kind.value}", value)
        url = section.take("url", str, None)
        if url is None:
            raise ConfigError(f"endpoints.{kind.value} needs a url")
        endpoint = BackendEndpoint(
            kind=kind,
            base_url=url,
            timeout=section.take("timeout", float, 30.0),
            max_retries=section.take("max_retries", int, 2),
        )
        section.finish()
        return endpoint
    raise ConfigError(f"endpoints.{kind.value} must be a url string or a table")


def parse_config(data: dict) -> RunSettings:
    """Turn a parsed TOML document into pipeline settings."""
    root = _Section("", data)
    label_text = root.take("label", str, None)
    if label_text is None:
        raise ConfigError("config needs a label")
    try:
        label = LabelWord(label_text)
    except ValueError as exc:
        raise ConfigError(f"invalid label: {exc}") from exc

    out_dir = root.take("out", str, None)
    iterations = root.take("iterations", int, 1)
    scenes = root.take("scenes_per_iteration", int, 2)
    prompts = root.take("prompts_per_label", int, 1)
    candidates = root.take("candidates_per_prompt", int, 2)
    seed = root.take("seed", int, 0)
    retry_budget = root.take("retry_budget", int, 2)
    chain_scenes = root.take("chain_scenes", bool, False)

    canvas = Canvas()
    canvas_data = root.subtable("canvas")
    if canvas_data is not None:
        section = _Section("canvas", canvas_data)
        canvas = Canvas(
            width=section.take("width", int, 512), height=section.take("height", int, 512)
        )
        section.finish()

    rules = BoxRules(canvas=canvas)
    rules_data = root.subtable("box_rules")
    if rules_data is not None:
        section = _Section("box_rules", rules_data)
        rules = BoxRules(
            min_side=section.take("min_side", float, 75.0),
            max_side=section.take("max_side", float, 300.0),
            canvas=canvas,
            iou_max=section.take("iou_max", float, 0.30),
        )
        section.finish()

    thresholds = GateThresholds()
    thresholds_data = root.subtable("thresholds")
    if thresholds_data is not None:
        section = _Section("thresholds", thresholds_data)
        thresholds = GateThresholds(
            psnr_min=section.take("psnr_min", float, 20.0),
            ssim_min=section.take("ssim_min", float, 0.75),
            sim_top_k=section.take("sim_top_k", int, 1),
            detect_conf_min=section.take("detect_conf_min", float, 0.35),
            semantic_min=section.take("semantic_min", float, None),
        )
        section.finish()

    metric_params = MetricParams()
    metrics_data = root.subtable("metrics")
    if metrics_data is not None:
        section = _Section("metrics", metrics_data)
        metric_params = MetricParams(
            bit_depth_max=section.take("bit_depth_max", float, 255.0),
            ssim_window=section.take("ssim_window", int, 11),
            ssim_sigma=section.take("ssim_sigma", float, 1.5),
            k1=section.take("k1", float, 0.01),
            k2=section.take("k2", float, 0.03),
        )
        section.finish()

    endpoints = default_endpoints()
    endpoints_data = root.subtable("endpoints")
    if endpoints_data is not None:
        by_value = {kind.value: kind for kind in CapabilityKind}
        for key, value in endpoints_data.items():
            kind = by_value.get(key)
            if kind is None:
                raise ConfigError(f"unknown config keys: endpoints.{key}")
            endpoints[kind] = _parse_endpoint(kind, value)

    root.finish()
    try:
        config = PipelineConfig(
            label=label,
            iterations=iterations,
            scenes_per_iteration=scenes,
            prompts_per_label=prompts,
            candidates_per_prompt=candidates,
            canvas=canvas,
            box_rules=rules,
            thresholds=thresholds,
            metric_params=metric_params,
            seed=seed,
            endpoints=endpoints,
            retry_budget=retry_budget,
            chain_scenes=chain_scenes,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunSettings(config=config, out_dir=out_dir)


def load_config(path) -> RunSettings:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    return parse_config(data)
