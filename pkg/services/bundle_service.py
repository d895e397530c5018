"""
Bundle Service - Foundation Data serialization with a hashed manifest
"""
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Type

from pydantic import BaseModel, ValidationError

import constants
from exceptions import CorruptBundle, NotABundle, StoreError
from models.schemas import (
    BundleManifest,
    DesignVec,
    FoundationBundle,
    GraphVec,
    GridSpec,
    LevelEntry,
    NetVec,
    PatchVec,
    PathVec,
)
from utils import canonical_json, fnv1a64, fnv1a64_many, write_json
from workspace import Workspace

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
LEVEL_DIRS = {"net": ("nets", "net"), "path": ("paths", "path"), "patch": ("patches", "patch")}


def _major(version: str) -> str:
    return version.split(".", 1)[0]


def _write_one(item: Tuple[Path, str, BaseModel]) -> bytes:
    path, _, model = item
    return write_json(path, model)


class BundleService:
    def __init__(self, threads: int = 1):
        self.threads = threads

    def _write_all(self, items: List[Tuple[Path, str, BaseModel]]) -> Dict[str, str]:
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                blobs = list(pool.map(_write_one, items))
        else:
            blobs = [_write_one(i) for i in items]
        return dict(zip((rel for _, rel, _ in items), fnv1a64_many(blobs)))

    def _level_items(self, root: Path, level: str, records) -> List[Tuple[Path, str, BaseModel]]:
        folder, stem = LEVEL_DIRS[level]
        target = root / folder
        if target.exists():
            shutil.rmtree(target)
        target.mkdir(parents=True)
        return [(target / f"{stem}_{i}.json", f"{folder}/{stem}_{i}.json", r) for i, r in enumerate(records)]

    def save(self, root: Path, bundle: FoundationBundle, name: Optional[str] = None) -> BundleManifest:
        """
        Write the levels present in `bundle`; levels it lacks keep their
        existing files and manifest entries. The manifest is written last.
        """
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        previous = self._read_manifest(root) if (root / MANIFEST_FILE).exists() else None
        design_name = name or bundle.name or (previous.design if previous else "")
        if not design_name:
            raise StoreError("bundle has no design name")
        levels: Dict[str, LevelEntry] = {}
        if previous and previous.design == design_name:
            levels.update(previous.levels)

        if bundle.design is not None:
            files = self._write_all([(root / "design.json", "design.json", bundle.design)])
            levels["design"] = LevelEntry(count=1, files=files)
        if bundle.graph is not None:
            files = self._write_all([(root / "graph.json", "graph.json", bundle.graph)])
            levels["graph"] = LevelEntry(count=1, files=files)
        if bundle.nets is not None:
            files = self._write_all(self._level_items(root, "net", bundle.nets))
            levels["net"] = LevelEntry(count=len(bundle.nets), files=files)
        if bundle.paths is not None:
            files = self._write_all(self._level_items(root, "path", bundle.paths))
            levels["path"] = LevelEntry(count=len(bundle.paths), files=files)
        if bundle.patches is not None:
            if bundle.grid is None:
                raise StoreError("patch level needs its grid")
            items = [(root / "grid.json", "grid.json", bundle.grid)] + self._level_items(root, "patch", bundle.patches)
            files = self._write_all(items)
            levels["patch"] = LevelEntry(count=len(bundle.patches), files=files)

        ordered = {k: levels[k] for k in ("design", "net", "graph", "path", "patch") if k in levels}
        manifest = BundleManifest(schema_version=constants.SCHEMA_VERSION, design=design_name, levels=ordered)
        write_json(root / MANIFEST_FILE, manifest)
        logger.info(f"📦 Saved bundle {design_name}: " + ", ".join(f"{k}={v.count}" for k, v in ordered.items()))
        return manifest

    def _read_manifest(self, root: Path) -> BundleManifest:
        path = root / MANIFEST_FILE
        if not path.is_file():
            raise NotABundle(f"{root} has no {MANIFEST_FILE}")
        try:
            manifest = BundleManifest.model_validate_json(path.read_bytes())
        except ValidationError as e:
            raise CorruptBundle(MANIFEST_FILE, str(e.errors()[0].get("msg")))
        if _major(manifest.schema_version) != _major(constants.SCHEMA_VERSION):
            raise NotABundle(f"unsupported schema version {manifest.schema_version}")
        return manifest

    def _read_verified(self, root: Path, files: Dict[str, str]) -> List[bytes]:
        """Bytes of every listed file; the first missing or mismatching file raises."""
        blobs = []
        for rel in files:
            path = root / rel
            if not path.is_file():
                raise CorruptBundle(rel, "file missing")
            blobs.append(path.read_bytes())
        for (rel, digest), actual in zip(files.items(), fnv1a64_many(blobs)):
            if actual != digest:
                raise CorruptBundle(rel)
        return blobs

    def _parse(self, rel: str, data: bytes, model: Type[BaseModel]):
        try:
            return model.model_validate_json(data)
        except ValidationError as e:
            raise CorruptBundle(rel, str(e.errors()[0].get("msg")))

    def _records(self, root: Path, entry: LevelEntry, prefix: str, model: Type[BaseModel]) -> List:
        rels = [r for r in entry.files if r.startswith(prefix)]
        if len(rels) != entry.count:
            raise CorruptBundle(MANIFEST_FILE, f"{prefix} count {entry.count} but {len(rels)} files listed")
        blobs = self._read_verified(root, {r: entry.files[r] for r in rels})
        return [self._parse(r, data, model) for r, data in zip(rels, blobs)]

    def load(self, root: Path) -> FoundationBundle:
        root = Path(root)
        manifest = self._read_manifest(root)
        bundle = FoundationBundle()
        levels = manifest.levels
        if "design" in levels:
            bundle.design = self._records(root, levels["design"], "design.json", DesignVec)[0]
        if "graph" in levels:
            bundle.graph = self._records(root, levels["graph"], "graph.json", GraphVec)[0]
        if "net" in levels:
            bundle.nets = self._records(root, levels["net"], "nets/", NetVec)
        if "path" in levels:
            bundle.paths = self._records(root, levels["path"], "paths/", PathVec)
        if "patch" in levels:
            entry = levels["patch"]
            data = self._read_verified(root, {"grid.json": entry.files.get("grid.json", "")})[0]
            bundle.grid = self._parse("grid.json", data, GridSpec)
            bundle.patches = self._records(root, entry, "patches/", PatchVec)
        logger.info(f"✅ Loaded bundle {manifest.design}")
        return bundle

    def manifest(self, root: Path) -> BundleManifest:
        return self._read_manifest(Path(root))


def save_bundle(ws: Workspace, bundle: FoundationBundle, name: Optional[str] = None) -> BundleManifest:
    return BundleService(ws.config.threads).save(ws.vectors, bundle, name)


def load_bundle(ws: Workspace) -> FoundationBundle:
    return BundleService().load(ws.vectors)


def manifest_digest(ws: Workspace) -> str:
    """Hash of the manifest bytes; equal digests mean byte-identical bundles."""
    return fnv1a64((ws.vectors / MANIFEST_FILE).read_bytes())


# Global service instance
bundle_service = BundleService()
