# bidprice/manifest.py
"""
Run manifests: one manifest.json per output directory recording how every
file in it was produced.
"""
import hashlib
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, Optional

import pandas as pd
from pydantic import ValidationError

from . import __version__
from .exceptions import ManifestError
from .models import AllianceInstance, OutputFile, RunManifest
from .network import instance_to_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def stable_sha256(path: Path) -> str:
    """
    Content hash that ignores wall-clock measurements.

    CSV files are hashed without their millisecond columns; other files
    are hashed as written.
    """
    path = Path(path)
    if path.suffix != ".csv":
        return file_sha256(path)
    frame = pd.read_csv(path)
    volatile = [c for c in frame.columns if c.endswith("_ms") or "_ms_" in c]
    stable = frame.drop(columns=volatile).to_csv(index=False)
    return hashlib.sha256(stable.encode("utf-8")).hexdigest()


def instance_hash(instance: AllianceInstance) -> str:
    """Hash of the canonical instance serialization."""
    return hashlib.sha256(instance_to_json(instance).encode("utf-8")).hexdigest()


def load_manifest(out_dir: Path) -> Optional[RunManifest]:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        return None
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except (ValidationError, ValueError) as e:
        raise ManifestError(f"Unreadable manifest '{path}': {e}") from e


def check_collision(out_dir: Path, command: str, seeds: Dict[str, int], force: bool = False) -> None:
    """
    Refuse to mix runs with different seeds in one output directory.

    An existing manifest for the same command with different seeds is a
    collision unless ``force`` is set.
    """
    existing = load_manifest(out_dir)
    if existing is None or existing.command != command or existing.seeds == seeds:
        return
    message = (
        f"Output directory '{out_dir}' already holds a '{command}' run with seeds {existing.seeds}, "
        f"requested {seeds}"
    )
    if force:
        logger.warning(f"{message}; overwriting")
        return
    logger.error(message)
    raise ManifestError(f"Seed collision: {message}. Use --force to overwrite")


def start_manifest(command: str, argv: Iterable[str], seeds: Dict[str, int],
                   instance: Optional[AllianceInstance] = None) -> RunManifest:
    return RunManifest(
        command=command,
        argv=list(argv),
        seeds=dict(seeds),
        instance_hash=instance_hash(instance) if instance is not None else None,
        code_version=__version__,
    )


def write_manifest(out_dir: Path, manifest: RunManifest, outputs: Iterable[Path],
                   checks_passed: bool = True) -> Path:
    """Hash every output, stamp the finish time and write manifest.json."""
    out_dir = Path(out_dir)
    files = []
    for path in sorted({Path(p) for p in outputs}):
        files.append(OutputFile(
            path=str(path.relative_to(out_dir)) if path.is_relative_to(out_dir) else str(path),
            sha256=file_sha256(path),
            stable_sha256=stable_sha256(path),
            size=path.stat().st_size,
        ))
    manifest = manifest.model_copy(update={
        "outputs": files,
        "finished": datetime.now(),
        "checks_passed": checks_passed,
    })
    target = out_dir / MANIFEST_NAME
    target.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote manifest with {len(files)} outputs to {target}")
    return target


def result_hashes(manifest: RunManifest) -> Dict[str, str]:
    """Output path to content hash, the part of a manifest that reruns must reproduce."""
    return {item.path: item.stable_sha256 for item in manifest.outputs}
