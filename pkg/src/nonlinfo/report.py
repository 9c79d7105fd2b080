"""Report envelope shared by every CLI command."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

SCHEMA_VERSION = "1"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def make_report(command: str, config: dict, result) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": _plain(config),
        "result": _plain(result),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def schema() -> dict:
    text = resources.files("nonlinfo").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)
