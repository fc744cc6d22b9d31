"""Run manifests.

Every CLI invocation writes `manifest.json` into its output directory twice:
once with status "running" before any work, and once finalized with status
"ok" or "error", end time and output paths.
"""

from __future__ import annotations

import json
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

from app.config import TOOL_VERSION
from app.constants import MANIFEST_NAME
from app.logging import get_logger
from app.models.reports import RunManifest

logger = get_logger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ManifestWriter:
    """Owns the manifest file of one output directory."""

    def __init__(self, out_dir: Path, subcommand: str, argv: Sequence[str]):
        self.out_dir = out_dir
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.path = out_dir / MANIFEST_NAME
        self._started = time.perf_counter()
        self.manifest = RunManifest(
            subcommand=subcommand,
            argv=list(argv),
            tool_version=TOOL_VERSION,
            started_at=_now(),
        )

    def start(
        self,
        config: Optional[dict[str, Any]] = None,
        seeds: Sequence[int] = (),
        inputs: Optional[dict[str, Path]] = None,
    ) -> None:
        self.manifest.config = config or {}
        self.manifest.seeds = [int(s) for s in seeds]
        self.manifest.inputs = {k: str(v) for k, v in (inputs or {}).items()}
        self._write()

    def add_output(self, name: str, path: Path) -> Path:
        self.manifest.outputs[name] = str(path)
        return path

    def finalize(self, error: Optional[str] = None) -> None:
        self.manifest.finished_at = _now()
        self.manifest.runtime_seconds = time.perf_counter() - self._started
        self.manifest.status = "error" if error else "ok"
        self.manifest.error = error
        self._write()
        logger.debug("Manifest finalized", path=str(self.path), status=self.manifest.status)

    def _write(self) -> None:
        with open(self.path, "w") as f:
            json.dump(self.manifest.model_dump(mode="json"), f, indent=2)
            f.write("\n")


def read_manifest(path: Path) -> RunManifest:
    with open(path) as f:
        return RunManifest.model_validate(json.load(f))
