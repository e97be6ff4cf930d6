import logging
import os
from pathlib import Path

import numpy as np
import pytest

from taskpart.cache.manager import FeatureCache
from taskpart.cache.models import DescriptorKey
from taskpart.commands.extract import extract_features, find_cloud_files
from taskpart.core.errors import ArtifactIOError, EmptyInput, InvalidConfig
from taskpart.models.cloud import CloudFormat
from taskpart.models.features import DescriptorSpec, FeatureVector


def _write_cloud(path: Path, seed: int, n: int = 40) -> Path:
    rng = np.random.default_rng(seed)
    lines = [" ".join(repr(float(c)) for c in p) for p in rng.normal(size=(n, 3))]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def key() -> DescriptorKey:
    return DescriptorKey(spec=DescriptorSpec(), sample=20, seed=0)


@pytest.fixture
def cloud_dir(tmp_path: Path) -> Path:
    clouds = tmp_path / "clouds"
    clouds.mkdir()
    for i in range(3):
        _write_cloud(clouds / f"c{i}.xyz", seed=i)
    (clouds / "notes.txt").write_text("not a cloud\n")
    return clouds


def test_put_then_get(tmp_path: Path, key: DescriptorKey):
    cloud = _write_cloud(tmp_path / "a.xyz", seed=1)
    cache = FeatureCache(tmp_path)
    vector = FeatureVector(id="a", values=np.array([0.25, 0.5, 1.0 / 3.0]))
    cache.put(cloud, key, vector, n_points=40)

    hit = FeatureCache(tmp_path).get(cloud, key, "renamed")
    assert hit is not None
    assert hit.id == "renamed"
    assert hit.values.tolist() == vector.values.tolist()


def test_other_parameters_miss(tmp_path: Path, key: DescriptorKey):
    cloud = _write_cloud(tmp_path / "a.xyz", seed=1)
    cache = FeatureCache(tmp_path)
    cache.put(cloud, key, FeatureVector(id="a", values=np.zeros(3)), n_points=40)
    assert cache.get(cloud, key.model_copy(update={"seed": 1}), "a") is None
    assert cache.get(tmp_path / "other.xyz", key, "other") is None


def test_changed_content_misses(tmp_path: Path, key: DescriptorKey):
    cloud = _write_cloud(tmp_path / "a.xyz", seed=1)
    cache = FeatureCache(tmp_path)
    cache.put(cloud, key, FeatureVector(id="a", values=np.zeros(3)), n_points=40)
    _write_cloud(cloud, seed=2, n=41)
    assert cache.get(cloud, key, "a") is None


def test_touched_file_still_hits(tmp_path: Path, key: DescriptorKey):
    cloud = _write_cloud(tmp_path / "a.xyz", seed=1)
    cache = FeatureCache(tmp_path)
    cache.put(cloud, key, FeatureVector(id="a", values=np.ones(3)), n_points=40)
    stat = cloud.stat()
    os.utime(cloud, (stat.st_atime + 100, stat.st_mtime + 100))
    hit = cache.get(cloud, key, "a")
    assert hit is not None
    assert hit.values.tolist() == [1.0, 1.0, 1.0]


def test_clear_and_list(tmp_path: Path, key: DescriptorKey):
    cache = FeatureCache(tmp_path)
    assert cache.clear_cache() == 0
    for name in ("a.xyz", "b.xyz"):
        cloud = _write_cloud(tmp_path / name, seed=len(name) + ord(name[0]))
        cache.put(cloud, key, FeatureVector(id=name, values=np.zeros(3)), n_points=40)
    listed = dict(cache.list_cached())
    assert set(listed) == {str((tmp_path / n).resolve()) for n in ("a.xyz", "b.xyz")}
    assert all(len(h) == 64 for h in listed.values())
    assert cache.clear_cache() == 2
    assert cache.list_cached() == []
    assert not (tmp_path / FeatureCache.CACHE_DIR).exists()


def test_corrupt_index_starts_afresh(tmp_path: Path, caplog):
    root = tmp_path / FeatureCache.CACHE_DIR
    root.mkdir()
    (root / FeatureCache.INDEX_FILE).write_text("{broken")
    with caplog.at_level(logging.WARNING, logger="taskpart"):
        assert FeatureCache(tmp_path).list_cached() == []
    assert "Corrupt cache index" in caplog.text


def test_find_cloud_files(cloud_dir: Path):
    found = find_cloud_files(cloud_dir, None)
    assert [p.name for p, _ in found] == ["c0.xyz", "c1.xyz", "c2.xyz"]
    assert {fmt for _, fmt in found} == {CloudFormat.XYZ}
    assert find_cloud_files(cloud_dir / "c1.xyz", None) == [
        (cloud_dir / "c1.xyz", CloudFormat.XYZ)
    ]


def test_find_cloud_files_errors(cloud_dir: Path):
    with pytest.raises(InvalidConfig):
        find_cloud_files(cloud_dir / "notes.txt", None)
    with pytest.raises(ArtifactIOError):
        find_cloud_files(cloud_dir / "absent", None)
    with pytest.raises(EmptyInput):
        find_cloud_files(cloud_dir, CloudFormat.PLY_ASCII)


def test_second_extraction_comes_from_the_cache(cloud_dir: Path, tmp_path: Path):
    files = find_cloud_files(cloud_dir, None)
    cache = FeatureCache(tmp_path)
    first, hits = extract_features(files, DescriptorSpec(), 20, 0, cache)
    assert hits == 0
    second, hits = extract_features(files, DescriptorSpec(), 20, 0, FeatureCache(tmp_path))
    assert hits == 3
    assert second.ids == first.ids == ("c0", "c1", "c2")
    assert second.values.tobytes() == first.values.tobytes()
    fresh, _ = extract_features(files, DescriptorSpec(), 20, 0, None, workers=2)
    assert fresh.values.tobytes() == first.values.tobytes()
