"""Shared fixtures: conformance fixture access and per-capability clients.

The conformance directory (JSON Schemas plus golden request/reply pairs) is
the contract both this package and the orchestrator implement against. It
lives at the repository root; point SHIM_CONFORMANCE_DIR elsewhere to test
against a relocated copy.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from modelshims.models import ShimConfig
from modelshims.server import build_app
from modelshims.wire import CAPABILITIES, ROUTES


def _conformance_dir() -> Path:
    override = os.environ.get("SHIM_CONFORMANCE_DIR")
    if override:
        return Path(override)
    return Path(__file__).resolve().parents[2] / "conformance"


@pytest.fixture(scope="session")
def conformance_dir() -> Path:
    path = _conformance_dir()
    if not (path / "schemas").is_dir():
        pytest.fail(
            f"conformance fixtures not found at {path}; "
            "set SHIM_CONFORMANCE_DIR to their location"
        )
    return path


@pytest.fixture(scope="session")
def golden_request(conformance_dir):
    def load(capability: str) -> dict:
        path = conformance_dir / "goldens" / f"{capability}.request.json"
        return json.loads(path.read_text())

    return load


@pytest.fixture(scope="session")
def reply_schema(conformance_dir):
    def load(capability: str) -> dict:
        path = conformance_dir / "schemas" / f"{capability}.reply.schema.json"
        return json.loads(path.read_text())

    return load


@pytest.fixture(scope="session")
def request_schema(conformance_dir):
    def load(capability: str) -> dict:
        path = conformance_dir / "schemas" / f"{capability}.request.schema.json"
        return json.loads(path.read_text())

    return load


@pytest.fixture(scope="session")
def clients() -> dict[str, TestClient]:
    return {
        capability: TestClient(build_app(ShimConfig(capability=capability, port=1)))
        for capability in CAPABILITIES
    }


@pytest.fixture(scope="session")
def routes() -> dict[str, str]:
    return dict(ROUTES)
