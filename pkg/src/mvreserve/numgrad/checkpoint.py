"""Versioned JSON checkpoints for named parameter arrays.

Values are written as row-major lists of Python floats. json round-trips
IEEE-754 doubles exactly (repr emits the shortest digit string that
parses back to the same bits), so load(save(params)) is bit-identical.
"""

from __future__ import annotations

import json

import numpy as np

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Raised on malformed or incompatible checkpoint files."""


def save_checkpoint(path: str, params: dict[str, np.ndarray], meta: dict | None = None) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "meta": meta or {},
        "params": {
            name: {
                "shape": list(value.shape),
                "data": np.asarray(value, dtype=np.float64).ravel().tolist(),
            }
            for name, value in params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: invalid JSON: {exc}") from None
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format_version {version!r}")
    params = {}
    for name, entry in payload.get("params", {}).items():
        shape = tuple(entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        expected = int(np.prod(shape)) if shape else 1
        if data.size != expected:
            raise CheckpointError(
                f"{path}: parameter {name!r} has {data.size} values, "
                f"shape {shape} needs {expected}"
            )
        params[name] = data.reshape(shape)
    return params, payload.get("meta", {})
