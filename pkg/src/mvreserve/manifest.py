"""Reproducibility manifests for batch runs.

Every command invocation records what it consumed and produced: the
exact argument vector, the resolved configuration, content hashes of
all input and output files, the seed, and the library versions. A
manifest contains no timestamps or host identifiers, so a rerun of the
same command on the same inputs yields the same manifest (up to the
out-directory path, which the replay machinery normalizes).

replay_manifest() re-invokes the recorded argument vector into a fresh
directory and compares output hashes byte for byte, which is the
reproducibility check shipped with the batch interface.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__

MANIFEST_NAME = "manifest.json"


class ManifestError(ValueError):
    """Raised on malformed manifests or failed replay verification."""


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _versions() -> dict[str, str]:
    return {
        "mvreserve": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": "{}.{}.{}".format(*sys.version_info[:3]),
    }


@dataclass
class RunManifest:
    """One command invocation's reproducibility record."""

    argv: list[str]
    seed: int | None
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    versions: dict[str, str] = field(default_factory=_versions)

    def add_input(self, path: str) -> None:
        self.inputs[os.path.abspath(path)] = file_sha256(path)

    def add_outputs(self, out_dir: str) -> None:
        """Hash every regular file under out_dir except the manifest."""
        for root, _dirs, files in os.walk(out_dir):
            for name in sorted(files):
                if name == MANIFEST_NAME:
                    continue
                path = os.path.join(root, name)
                rel = os.path.relpath(path, out_dir)
                self.outputs[rel] = file_sha256(path)

    def to_dict(self) -> dict:
        return {
            "argv": list(self.argv),
            "seed": self.seed,
            "config": self.config,
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
            "versions": dict(self.versions),
        }

    def write(self, out_dir: str) -> str:
        self.add_outputs(out_dir)
        path = os.path.join(out_dir, MANIFEST_NAME)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        return path


def load_manifest(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    for key in ("argv", "inputs", "outputs"):
        if key not in payload:
            raise ManifestError(f"{path}: missing {key!r}")
    return payload


def _replace_out_dir(argv: list[str], new_dir: str) -> list[str]:
    replaced = list(argv)
    for i, token in enumerate(replaced):
        if token == "--out" and i + 1 < len(replaced):
            replaced[i + 1] = new_dir
            return replaced
        if token.startswith("--out="):
            replaced[i] = f"--out={new_dir}"
            return replaced
    raise ManifestError("recorded argv has no --out argument to redirect")


def replay_manifest(manifest_path: str, work_dir: str) -> dict:
    """Re-run the recorded command and verify outputs byte for byte.

    Returns {"matched": [...], "mismatched": [...], "missing": [...]};
    raises ManifestError if the recorded inputs have changed on disk,
    since replaying against different inputs proves nothing.
    """
    from .cli import main as cli_main

    payload = load_manifest(manifest_path)
    for path, digest in payload["inputs"].items():
        if not os.path.exists(path):
            raise ManifestError(f"recorded input vanished: {path}")
        if file_sha256(path) != digest:
            raise ManifestError(f"recorded input changed on disk: {path}")

    os.makedirs(work_dir, exist_ok=True)
    argv = [str(a) for a in payload["argv"]]
    if argv and argv[0] == "mvreserve":  # stored with the program name
        argv = argv[1:]
    argv = _replace_out_dir(argv, work_dir)
    code = cli_main(argv)
    if code != 0:
        raise ManifestError(f"replay command exited with status {code}")

    matched, mismatched, missing = [], [], []
    for rel, digest in sorted(payload["outputs"].items()):
        candidate = os.path.join(work_dir, rel)
        if not os.path.exists(candidate):
            missing.append(rel)
        elif file_sha256(candidate) == digest:
            matched.append(rel)
        else:
            mismatched.append(rel)
    return {"matched": matched, "mismatched": mismatched, "missing": missing}
