"""Loading run configuration documents."""

import json
from pathlib import Path

from pydantic import ValidationError

from taskpart.core.errors import ArtifactIOError, InvalidConfig
from taskpart.models.simulation import RunConfig


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{where}: {item['msg']}")
    return "; ".join(parts)


def parse_run_config(text: str) -> RunConfig:
    """Validate a JSON document; absent fields take their defaults."""
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"not valid JSON: {e}")
    if not isinstance(data, dict):
        raise InvalidConfig("config document must be a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidConfig(_describe(e))


def load_run_config(path: Path | None) -> RunConfig:
    """Read ``path``, or return the default configuration when it is None."""
    if path is None:
        return RunConfig()
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise InvalidConfig(f"{path} is not valid UTF-8 text")
    except OSError as e:
        raise ArtifactIOError(path, e.strerror or str(e))
    return parse_run_config(text)
