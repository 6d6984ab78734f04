"""
Tests for run manifests and seed collision checks.
"""
import pandas as pd
import pytest

from bidprice import __version__
from bidprice.exceptions import ManifestError
from bidprice.manifest import (
    MANIFEST_NAME,
    check_collision,
    file_sha256,
    instance_hash,
    load_manifest,
    result_hashes,
    stable_sha256,
    start_manifest,
    write_manifest,
)

pytestmark = pytest.mark.unit


def _timing(path, mean_ms):
    pd.DataFrame([{"model": "cp", "n_paths": 10, "mean_ms": mean_ms, "solve_ms_total": 2 * mean_ms}]).to_csv(
        path, index=False
    )


def test_stable_hash_ignores_timing_columns(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    _timing(first, 1.0)
    _timing(second, 7.5)
    assert file_sha256(first) != file_sha256(second)
    assert stable_sha256(first) == stable_sha256(second)


def test_stable_hash_of_other_files(tmp_path):
    path = tmp_path / "instance.json"
    path.write_text("{}", encoding="utf-8")
    assert stable_sha256(path) == file_sha256(path)


def test_instance_hash_tracks_content(demo, star):
    assert instance_hash(demo) == instance_hash(demo.model_copy())
    assert instance_hash(demo) != instance_hash(star)


def test_write_and_load(tmp_path, demo):
    output = tmp_path / "instance.json"
    output.write_text("{}", encoding="utf-8")
    manifest = start_manifest("gen", ["gen", "--demo"], {"seed": 3}, demo)
    target = write_manifest(tmp_path, manifest, [output])

    assert target == tmp_path / MANIFEST_NAME
    loaded = load_manifest(tmp_path)
    assert loaded.command == "gen"
    assert loaded.seeds == {"seed": 3}
    assert loaded.code_version == __version__
    assert loaded.instance_hash == instance_hash(demo)
    assert loaded.finished is not None
    assert result_hashes(loaded) == {"instance.json": file_sha256(output)}


def test_missing_manifest(tmp_path):
    assert load_manifest(tmp_path) is None


def test_unreadable_manifest(tmp_path):
    (tmp_path / MANIFEST_NAME).write_text("not json", encoding="utf-8")
    with pytest.raises(ManifestError, match="Unreadable manifest"):
        load_manifest(tmp_path)


class TestCollision:
    @pytest.fixture
    def out_dir(self, tmp_path):
        write_manifest(tmp_path, start_manifest("simulate", ["simulate"], {"seed": 1}), [])
        return tmp_path

    def test_same_seeds_are_fine(self, out_dir):
        check_collision(out_dir, "simulate", {"seed": 1})

    def test_other_command_is_fine(self, out_dir):
        check_collision(out_dir, "gen", {"seed": 2})

    def test_different_seeds_collide(self, out_dir):
        with pytest.raises(ManifestError, match="Seed collision"):
            check_collision(out_dir, "simulate", {"seed": 2})

    def test_force_overrides(self, out_dir):
        check_collision(out_dir, "simulate", {"seed": 2}, force=True)

    def test_empty_directory(self, tmp_path):
        check_collision(tmp_path, "simulate", {"seed": 2})
