"""Run manifests: configuration and content digests, no timestamps.

A manifest records the tool version, the full run configuration, and the
sha256 of every input and output file. Two runs with identical config and
inputs therefore produce byte-identical manifests, which is the handle the
reproducibility checks grab.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping, Optional, Sequence

from ._version import __version__
from .io import atomic_write


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_config(config: Mapping) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def config_digest(config: Mapping) -> str:
    """Short digest of the canonical config, used in output headers."""
    return hashlib.sha256(canonical_config(config).encode()).hexdigest()[:12]


def header_comment(config: Mapping) -> str:
    return f"# typodist {__version__} config={config_digest(config)}"


def digest_tree(root) -> dict[str, str]:
    """sha256 per file under ``root``, keyed by posix relative path."""
    root = Path(root)
    if root.is_file():
        return {root.name: sha256_file(root)}
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[path.relative_to(root).as_posix()] = sha256_file(path)
    return out


def write_manifest(
    path,
    *,
    subcommand: str,
    config: Mapping,
    input_root,
    outputs: Sequence = (),
    extra: Optional[Mapping] = None,
) -> dict:
    """Write the manifest JSON for one run and return it."""
    doc = {
        "tool": "typodist",
        "version": __version__,
        "subcommand": subcommand,
        "config": dict(config),
        "config_digest": config_digest(config),
        "inputs": digest_tree(input_root),
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    if extra:
        doc["summary"] = dict(extra)
    with atomic_write(path) as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return doc
