"""Run manifests: a resolved, reproducible snapshot of every command.

A manifest records the artifact version, the command, every flag with
defaults materialized, the seed, and the sha256 of each input file. It
contains nothing volatile (no timestamps, no hostnames), so re-running a
command from its manifest reproduces the outputs byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, flags: dict, inputs: dict[str, str | Path],
                   outputs: list[str]) -> dict:
    return {
        "artifact_version": __version__,
        "command": command,
        "flags": {k: flags[k] for k in sorted(flags)},
        "inputs": {name: file_sha256(p) for name, p in sorted(inputs.items())},
        "outputs": sorted(outputs),
    }


def write_manifest(path: str | Path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)
