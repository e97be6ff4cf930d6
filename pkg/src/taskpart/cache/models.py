"""Cache data models."""

import hashlib
from datetime import datetime

from pydantic import BaseModel, Field

from taskpart.models.features import DescriptorSpec


class CacheMetadata(BaseModel):
    """What the cached entry was computed from."""

    file_path: str
    file_hash: str
    file_size: int
    file_mtime: float
    cached_at: datetime = Field(default_factory=datetime.now)
    cache_version: str = "1"


class DescriptorKey(BaseModel):
    """Extraction parameters that, with the file content, determine a descriptor."""

    spec: DescriptorSpec
    sample: int
    seed: int

    def digest(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()[:16]


class CachedDescriptor(BaseModel):
    """A descriptor computed from one point-cloud file."""

    cache_metadata: CacheMetadata
    key: DescriptorKey
    n_points: int
    values: list[float]


class CacheIndex(BaseModel):
    """Maps resolved file paths to the content hash they had when cached."""

    entries: dict[str, str] = Field(default_factory=dict)
