"""Descriptor cache with hash/mtime invalidation."""

import hashlib
import json
import logging
import shutil
from datetime import datetime
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from taskpart.cache.models import (
    CachedDescriptor,
    CacheIndex,
    CacheMetadata,
    DescriptorKey,
)
from taskpart.models.features import FeatureVector

log = logging.getLogger(__name__)


class FeatureCache:
    """Caches extracted descriptors per point-cloud file and parameter set."""

    CACHE_DIR = ".taskpart_cache"
    INDEX_FILE = "index.json"
    CACHE_VERSION = "1"

    def __init__(self, project_dir: Path):
        self.cache_root = project_dir / self.CACHE_DIR
        self.index_path = self.cache_root / self.INDEX_FILE
        self._index: CacheIndex | None = None

    def _load_index(self) -> CacheIndex:
        if self._index is not None:
            return self._index
        if self.index_path.exists():
            try:
                data = json.loads(self.index_path.read_text())
                self._index = CacheIndex.model_validate(data)
            except (ValueError, ValidationError):
                log.warning(f"Corrupt cache index {self.index_path}, starting afresh")
                self._index = CacheIndex()
        else:
            self._index = CacheIndex()
        return self._index

    def _save_index(self) -> None:
        self.cache_root.mkdir(parents=True, exist_ok=True)
        self.index_path.write_text(self._load_index().model_dump_json(indent=2))

    def get_file_hash(self, file_path: Path) -> str:
        """SHA-256 of the file content."""
        sha256 = hashlib.sha256()
        with open(file_path, "rb") as f:
            for chunk in iter(lambda: f.read(8192), b""):
                sha256.update(chunk)
        return sha256.hexdigest()

    def _entry_path(self, file_hash: str, key: DescriptorKey) -> Path:
        return self.cache_root / "descriptors" / file_hash / f"{key.digest()}.json"

    def get(
        self, file_path: Path, key: DescriptorKey, cloud_id: str
    ) -> FeatureVector | None:
        """The cached descriptor for ``file_path``, or None when absent or stale."""
        index = self._load_index()
        file_hash = index.entries.get(str(file_path.resolve()))
        if file_hash is None:
            return None
        entry_path = self._entry_path(file_hash, key)
        if not entry_path.exists():
            return None
        try:
            cached = CachedDescriptor.model_validate_json(entry_path.read_text())
        except (ValueError, ValidationError):
            log.warning(f"Ignoring corrupt cache entry {entry_path}")
            return None
        if cached.key != key:
            return None

        stat = file_path.stat()
        meta = cached.cache_metadata
        if meta.file_mtime != stat.st_mtime or meta.file_size != stat.st_size:
            if self.get_file_hash(file_path) != meta.file_hash:
                return None
            meta.file_mtime = stat.st_mtime
            entry_path.write_text(cached.model_dump_json(indent=2))

        values = np.array(cached.values, dtype=np.float64)
        return FeatureVector(id=cloud_id, values=values)

    def put(
        self, file_path: Path, key: DescriptorKey, vector: FeatureVector, n_points: int
    ) -> None:
        """Store the descriptor extracted from ``file_path`` under ``key``."""
        stat = file_path.stat()
        file_hash = self.get_file_hash(file_path)
        cached = CachedDescriptor(
            cache_metadata=CacheMetadata(
                file_path=str(file_path.resolve()),
                file_hash=file_hash,
                file_size=stat.st_size,
                file_mtime=stat.st_mtime,
                cached_at=datetime.now(),
                cache_version=self.CACHE_VERSION,
            ),
            key=key,
            n_points=n_points,
            values=[float(v) for v in vector.values],
        )
        entry_path = self._entry_path(file_hash, key)
        entry_path.parent.mkdir(parents=True, exist_ok=True)
        entry_path.write_text(cached.model_dump_json(indent=2))

        self._load_index().entries[str(file_path.resolve())] = file_hash
        self._save_index()

    def clear_cache(self) -> int:
        """Remove the cache directory. Returns the number of cached files dropped."""
        if not self.cache_root.exists():
            return 0
        descriptors = self.cache_root / "descriptors"
        count = len(list(descriptors.iterdir())) if descriptors.exists() else 0
        shutil.rmtree(self.cache_root)
        self._index = None
        return count

    def list_cached(self) -> list[tuple[str, str]]:
        """(path, content hash) for every cached file."""
        return list(self._load_index().entries.items())
