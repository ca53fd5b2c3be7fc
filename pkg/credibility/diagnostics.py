"""Run manifests: configuration, input checksums and package versions."""

from __future__ import annotations

import hashlib
import logging
import platform
from collections.abc import Iterable
from importlib import metadata
from pathlib import Path
from typing import Any

from .config import RunConfig
from .exceptions import InputError
from .export import write_json

_LOGGER = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

_PACKAGES = ("news-credibility", "numpy", "scipy", "scikit-learn", "torch", "voluptuous", "PyYAML")


def file_sha256(path: Path) -> str:
    """Return the SHA-256 digest of a file."""
    digest = hashlib.sha256()
    try:
        with path.open("rb") as handle:
            for chunk in iter(lambda: handle.read(1 << 20), b""):
                digest.update(chunk)
    except OSError as err:
        raise InputError(f"Cannot checksum {path}") from err
    return digest.hexdigest()


def package_versions() -> dict[str, str | None]:
    """Return installed versions of the packages that affect results."""
    versions: dict[str, str | None] = {}
    for name in _PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def get_run_diagnostics(
    command: str,
    config: RunConfig,
    outputs: Iterable[Path] = (),
    extra: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Return everything needed to reproduce a command's outputs."""
    inputs = {
        name: {"path": str(path), "sha256": file_sha256(path)}
        for name in ("posts", "ratings", "domain_map")
        if (path := getattr(config, name)) is not None and path.is_file()
    }
    return {
        "command": command,
        "config": config.as_dict(),
        "inputs": inputs,
        "outputs": sorted(p.name for p in outputs),
        "seed": config.seed,
        "deterministic": config.deterministic,
        "python": platform.python_version(),
        "versions": package_versions(),
        **(extra or {}),
    }


def write_manifest(
    command: str,
    config: RunConfig,
    outputs: Iterable[Path] = (),
    extra: dict[str, Any] | None = None,
) -> Path:
    """Write ``manifest.json`` next to the outputs of a command."""
    path = config.out_dir / MANIFEST_NAME
    write_json(get_run_diagnostics(command, config, outputs, extra), path)
    _LOGGER.debug("Wrote manifest %s", path)
    return path
