"""
Workspace Configuration
Directory layout and config.json management for a vectorization workspace
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from exceptions import ConfigError, WorkspaceError
from models.schemas import WorkspaceConfig
from utils import error_field, error_message, read_json, write_json

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
DIRECTORIES = ("result", "report", "feature", "vectors")


def parse_config(raw: Union[WorkspaceConfig, Dict[str, Any], None]) -> WorkspaceConfig:
    """Validate a config mapping; the first failing field is reported as ConfigError(field)."""
    if raw is None:
        return WorkspaceConfig()
    if isinstance(raw, WorkspaceConfig):
        raw = raw.model_dump()
    try:
        return WorkspaceConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(error_field(e), error_message(e) or "")


@dataclass
class Workspace:
    root: Path
    config: WorkspaceConfig = field(default_factory=WorkspaceConfig)

    @property
    def dirs(self) -> Dict[str, Path]:
        return {name: self.root / name for name in DIRECTORIES}

    @property
    def result(self) -> Path:
        return self.root / "result"

    @property
    def report(self) -> Path:
        return self.root / "report"

    @property
    def feature(self) -> Path:
        return self.root / "feature"

    @property
    def vectors(self) -> Path:
        return self.root / "vectors"

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_FILE

    def path(self, relative: str) -> Path:
        """Workspace-relative path; anything resolving outside the root is refused."""
        target = (self.root / relative).resolve()
        root = self.root.resolve()
        if target != root and root not in target.parents:
            raise WorkspaceError(f"path {relative} leaves the workspace {self.root}")
        return target

    def save_config(self) -> None:
        write_json(self.config_path, self.config)
        logger.info(f"📦 Saved {self.config_path}")


def create_workspace(root: Union[str, Path], config: Union[WorkspaceConfig, Dict[str, Any], None] = None) -> Workspace:
    """
    Create (or refresh) a workspace: the four output directories plus config.json.

    Existing outputs are never touched. Without an explicit config an existing
    config.json is kept.
    """
    root = Path(root)
    cfg_path = root / CONFIG_FILE
    if config is None and cfg_path.exists():
        cfg = load_config(root)
    else:
        cfg = parse_config(config)
    try:
        root.mkdir(parents=True, exist_ok=True)
        for name in DIRECTORIES:
            (root / name).mkdir(exist_ok=True)
    except OSError as e:
        raise WorkspaceError(f"cannot create workspace at {root}: {e}")
    ws = Workspace(root=root, config=cfg)
    try:
        ws.save_config()
    except OSError as e:
        raise WorkspaceError(f"cannot write {cfg_path}: {e}")
    logger.info(f"✅ Workspace ready at {root}")
    return ws


def load_config(root: Union[str, Path]) -> WorkspaceConfig:
    cfg_path = Path(root) / CONFIG_FILE
    if not cfg_path.is_file():
        raise WorkspaceError(f"no workspace at {root} ({CONFIG_FILE} missing)")
    try:
        raw = read_json(cfg_path)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(CONFIG_FILE, str(e))
    return parse_config(raw)


def open_workspace(root: Union[str, Path], threads: Optional[int] = None) -> Workspace:
    ws = Workspace(root=Path(root), config=load_config(root))
    if threads is not None:
        ws.config = ws.config.model_copy(update={"threads": threads})
    for path in ws.dirs.values():
        path.mkdir(exist_ok=True)
    return ws
