# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the codesynth core."""

import importlib.util
import os
from pathlib import Path

# Data and the fixture renderer are installed next to the extension, which
# editable installs keep outside this directory.
_spec = importlib.util.find_spec("codesynth._codesynth")
_here = Path(_spec.origin).resolve().parent if _spec and _spec.origin else Path(__file__).resolve().parent

if (_here / "data").is_dir():
    os.environ.setdefault("CODESYNTH_DATA_DIR", str(_here / "data"))
if (_here / "bin" / "codesynth-fixture-render").is_file():
    os.environ.setdefault("CODESYNTH_FIXTURE_RENDER", str(_here / "bin" / "codesynth-fixture-render"))

from ._codesynth import (  # noqa: E402
    Error,
    extract_code_block,
    extract_points,
    format_qa_triplets,
    format_training_example,
    mean_pairwise_cosine_distance,
    normalize_coords,
    parse_json_payload,
    parse_qa_triplets,
    parse_topics,
    registry_summary,
    render_template,
    resolve_category,
    run_cli,
    sample_persona,
    select_pipelines,
    validate_shard,
)


def data_dir() -> Path:
    return Path(os.environ.get("CODESYNTH_DATA_DIR", _here / "data"))


__all__ = [
    "Error",
    "data_dir",
    "extract_code_block",
    "extract_points",
    "format_qa_triplets",
    "format_training_example",
    "mean_pairwise_cosine_distance",
    "normalize_coords",
    "parse_json_payload",
    "parse_qa_triplets",
    "parse_topics",
    "registry_summary",
    "render_template",
    "resolve_category",
    "run_cli",
    "sample_persona",
    "select_pipelines",
    "validate_shard",
]
