"""Flat-file experiment tracking.

Each run is a self-contained directory::

    runs/<run_id>/manifest.json      (written atomically at finalize)
    runs/<run_id>/artifacts/*

While a run is open only ``manifest.draft.json`` exists; listings skip
such incomplete runs, so a crash can never leave a half-written manifest
visible. Manifests are JSON with sorted keys, which makes reruns
byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from .errors import FlowcastError

__all__ = [
    "RunManifest",
    "RunHandle",
    "open_run",
    "list_runs",
    "load_manifest",
    "code_fingerprint",
]

MANIFEST_NAME = "manifest.json"
DRAFT_NAME = "manifest.draft.json"


@dataclass
class RunManifest:
    run_id: str
    created_at: str
    params: Dict[str, str]
    metrics: Dict[str, float] = field(default_factory=dict)
    artifact_paths: List[str] = field(default_factory=list)
    code_fingerprint: str = ""

    def to_json(self) -> str:
        payload = {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "params": self.params,
            "metrics": self.metrics,
            "artifact_paths": self.artifact_paths,
            "code_fingerprint": self.code_fingerprint,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        raw = json.loads(text)
        return cls(
            run_id=raw["run_id"],
            created_at=raw["created_at"],
            params=dict(raw["params"]),
            metrics=dict(raw["metrics"]),
            artifact_paths=list(raw["artifact_paths"]),
            code_fingerprint=raw.get("code_fingerprint", ""),
        )


_fingerprint_cache: Optional[str] = None


def code_fingerprint() -> str:
    """Content hash over this package's source files."""
    global _fingerprint_cache
    if _fingerprint_cache is None:
        pkg_dir = os.path.dirname(os.path.abspath(__file__))
        digest = hashlib.sha256()
        for dirpath, dirnames, filenames in sorted(os.walk(pkg_dir)):
            dirnames.sort()
            for name in sorted(filenames):
                if not name.endswith(".py"):
                    continue
                path = os.path.join(dirpath, name)
                rel = os.path.relpath(path, pkg_dir)
                digest.update(rel.encode())
                with open(path, "rb") as fh:
                    digest.update(fh.read())
        _fingerprint_cache = digest.hexdigest()[:16]
    return _fingerprint_cache


class RunHandle:
    """Single-writer handle for one run directory."""

    def __init__(self, root: str, manifest: RunManifest):
        self._root = root
        self._manifest = manifest
        self._closed = False

    @property
    def run_id(self) -> str:
        return self._manifest.run_id

    @property
    def run_dir(self) -> str:
        return os.path.join(self._root, self._manifest.run_id)

    def _require_open(self):
        if self._closed:
            raise FlowcastError("closed-run", f"run {self.run_id} is finalized")

    def log_metric(self, key: str, value: float) -> None:
        """Record a metric; logging the same key again overwrites it."""
        self._require_open()
        self._manifest.metrics[key] = float(value)

    def set_param(self, key: str, value: str) -> None:
        """Add or overwrite a manifest parameter (e.g. failure annotations)."""
        self._require_open()
        self._manifest.params[key] = str(value)

    def log_artifact(self, name: str, data: Union[bytes, str]) -> str:
        """Store bytes under artifacts/<name>; returns the relative path."""
        self._require_open()
        if name.startswith("/") or ".." in name.split("/"):
            raise FlowcastError("bad-parameter", f"bad artifact name {name!r}")
        rel = os.path.join("artifacts", name)
        path = os.path.join(self.run_dir, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(path, mode) as fh:
            fh.write(data)
        if rel not in self._manifest.artifact_paths:
            self._manifest.artifact_paths.append(rel)
        return rel

    def artifact_path(self, name: str) -> str:
        return os.path.join(self.run_dir, "artifacts", name)

    def finalize(self) -> RunManifest:
        """Atomically write the manifest and close the handle."""
        self._require_open()
        self._manifest.artifact_paths.sort()
        final = os.path.join(self.run_dir, MANIFEST_NAME)
        tmp = final + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(self._manifest.to_json())
        os.replace(tmp, final)
        draft = os.path.join(self.run_dir, DRAFT_NAME)
        if os.path.exists(draft):
            os.remove(draft)
        self._closed = True
        return self._manifest


def open_run(root: str, params: Dict[str, str]) -> RunHandle:
    """Create ``root/<run_id>/`` with a draft manifest."""
    run_id = time.strftime("%Y%m%d-%H%M%S") + "-" + uuid.uuid4().hex[:12]
    run_dir = os.path.join(root, run_id)
    try:
        os.makedirs(run_dir)
        os.makedirs(os.path.join(run_dir, "artifacts"), exist_ok=True)
    except OSError as exc:
        raise FlowcastError("io", f"cannot create run directory: {exc}") from exc
    manifest = RunManifest(
        run_id=run_id,
        created_at=time.strftime("%Y-%m-%dT%H:%M:%S"),
        params={k: str(v) for k, v in params.items()},
        code_fingerprint=code_fingerprint(),
    )
    draft = os.path.join(run_dir, DRAFT_NAME)
    try:
        with open(draft, "w", encoding="utf-8") as fh:
            fh.write(manifest.to_json())
    except OSError as exc:
        raise FlowcastError("io", f"cannot write draft manifest: {exc}") from exc
    return RunHandle(root, manifest)


def list_runs(root: str) -> List[RunManifest]:
    """All finalized runs under ``root``; incomplete runs are skipped."""
    if not os.path.isdir(root):
        return []
    out = []
    for name in sorted(os.listdir(root)):
        path = os.path.join(root, name, MANIFEST_NAME)
        if os.path.isfile(path):
            with open(path, "r", encoding="utf-8") as fh:
                out.append(RunManifest.from_json(fh.read()))
    return out


def load_manifest(root: str, run_id: str) -> RunManifest:
    path = os.path.join(root, run_id, MANIFEST_NAME)
    if not os.path.isfile(path):
        raise FlowcastError("io", f"no finalized run {run_id!r} under {root}")
    with open(path, "r", encoding="utf-8") as fh:
        return RunManifest.from_json(fh.read())
