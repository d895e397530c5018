"""
Ingest Service - read a workspace's LEF, tech sidecar and DEF into a Design
"""
import logging
from pathlib import Path
from typing import Dict

from exceptions import WorkspaceError
from models.design import Design
from services.def_service import parse_def, write_def
from services.design_service import load_tech_sidecar, merge_sidecar, sidecar_of
from services.lef_service import parse_lef, write_lef
from utils import canonical_json
from workspace import Workspace

logger = logging.getLogger(__name__)


def _input(ws: Workspace, name: str) -> Path:
    path = Path(name)
    if not path.is_absolute():
        path = ws.root / path
    if not path.is_file():
        raise WorkspaceError(f"input file {path} not found")
    return path


def read_design(ws: Workspace) -> Design:
    """Parse the configured LEF (plus sidecar, when set) and DEF."""
    cfg = ws.config
    tech = parse_lef(_input(ws, cfg.lef_file).read_text(encoding="utf-8"))
    if cfg.tech_sidecar:
        sidecar_path = Path(cfg.tech_sidecar)
        full = sidecar_path if sidecar_path.is_absolute() else ws.root / sidecar_path
        if full.is_file():
            tech = merge_sidecar(tech, load_tech_sidecar(full.read_text(encoding="utf-8")))
        else:
            logger.warning(f"⚠️ Tech sidecar {full} missing; electricals default to zero")
    design = parse_def(_input(ws, cfg.def_file).read_text(encoding="utf-8"), tech, cfg.class_rules)
    return design


def write_design(ws: Workspace, design: Design, stem: str = "design") -> Dict[str, str]:
    """
    DEF, LEF and tech sidecar for `design` under result/. Returns the
    workspace-relative paths written.
    """
    out = ws.result
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "def": f"result/{stem}.def",
        "lef": "result/tech.lef",
        "sidecar": "result/tech.json",
    }
    ws.path(files["def"]).write_text(write_def(design), encoding="utf-8")
    ws.path(files["lef"]).write_text(write_lef(design.tech), encoding="utf-8")
    ws.path(files["sidecar"]).write_text(canonical_json(sidecar_of(design.tech)), encoding="utf-8")
    logger.info(f"📦 Wrote {files['def']}, {files['lef']} and {files['sidecar']}")
    return files
