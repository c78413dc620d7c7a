# SPDX-License-Identifier: Apache-2.0
from __future__ import annotations

import os
from pathlib import Path

import pytest

SOURCE_DIR = Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return SOURCE_DIR / "data"


def _binary(env: str, build_name: str) -> Path | None:
    if os.environ.get(env):
        return Path(os.environ[env])
    candidate = SOURCE_DIR / "build" / build_name
    return candidate if candidate.is_file() else None


@pytest.fixture(scope="session")
def cli_binary() -> Path:
    path = _binary("CODESYNTH_CLI", "codesynth")
    if path is None:
        pytest.skip("codesynth CLI not built")
    return path


@pytest.fixture(scope="session")
def fixture_binary() -> Path:
    path = _binary("CODESYNTH_FIXTURE_RENDER", "codesynth-fixture-render")
    if path is None:
        pytest.skip("fixture renderer not built")
    return path
