"""Unit tests for run manifests"""

import tempfile
from pathlib import Path

import pytest

from app.cli.manifest import ManifestWriter, read_manifest
from app.config import TOOL_VERSION


@pytest.fixture
def temp_out_dir():
    """Create a temporary output directory"""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir) / "run"


@pytest.mark.unit
class TestManifestWriter:
    """Tests for ManifestWriter"""

    def test_start_writes_running_manifest(self, temp_out_dir):
        """start() should create the directory and a 'running' manifest"""
        writer = ManifestWriter(temp_out_dir, "train", ["train", "--seed", "3"])
        writer.start(config={"lr": 0.1}, seeds=[3], inputs={"scenario": Path("s.csv")})

        manifest = read_manifest(writer.path)
        assert manifest.status == "running"
        assert manifest.seeds == [3]
        assert manifest.inputs == {"scenario": "s.csv"}
        assert manifest.tool_version == TOOL_VERSION

    def test_finalize_ok(self, temp_out_dir):
        """finalize() without error should record outputs and runtime"""
        writer = ManifestWriter(temp_out_dir, "gen-data", [])
        writer.start()
        out = writer.add_output("scenario_csv", temp_out_dir / "scenario.csv")
        writer.finalize()

        manifest = read_manifest(writer.path)
        assert out == temp_out_dir / "scenario.csv"
        assert manifest.status == "ok"
        assert manifest.outputs == {"scenario_csv": str(out)}
        assert manifest.finished_at is not None
        assert manifest.runtime_seconds >= 0.0

    def test_finalize_error(self, temp_out_dir):
        """finalize(error) should mark the run as failed"""
        writer = ManifestWriter(temp_out_dir, "score", [])
        writer.finalize(error="Parameter file not found")

        manifest = read_manifest(writer.path)
        assert manifest.status == "error"
        assert manifest.error == "Parameter file not found"
