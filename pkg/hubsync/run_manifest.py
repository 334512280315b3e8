import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from hubsync import __version__
from hubsync.errors import ConfigError

MANIFEST_FILE = "manifest.json"


class RunManifest(BaseModel):
    """Everything needed to reproduce a run: the command line, the config bytes and the outputs."""
    model_config = ConfigDict(frozen=True)

    tool_version: str = __version__
    subcommand: str
    argv: List[str]
    config_path: Optional[str] = None
    config_digest: Optional[str] = None
    seed: int
    settings: Dict[str, Any]
    outputs: List[str]
    output_digests: Dict[str, str]


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    path = Path(out_dir) / MANIFEST_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.model_dump(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path: str | Path) -> RunManifest:
    path = Path(path)
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Run manifest not found: {path}") from e
    except ValidationError as e:
        raise ConfigError(f"{path}: malformed run manifest ({e})") from e
