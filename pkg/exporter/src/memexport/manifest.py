"""Reading the engine's JSON Lines video manifest.

One JSON object per line with at least an ``id``; ``audio_path``/``tag_path``/
``embedding_path`` are optional strings resolved against the manifest's own
directory.  Fields the exporter does not need (``split``, ``mem_score``) are
carried through untouched or ignored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ExportError


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    split: str
    audio_path: Path | None
    tag_path: Path | None
    embedding_path: Path | None


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    path = Path(path)
    if not path.is_file():
        raise ExportError(f"manifest not found: {path}")
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}: line {lineno}: bad JSON ({exc})") from None
            if not isinstance(obj, dict):
                raise ExportError(f"{path}: line {lineno}: expected an object")
            vid = obj.get("id")
            if not isinstance(vid, str) or not vid:
                raise ExportError(f"{path}: line {lineno}: missing video id")
            if vid in seen:
                raise ExportError(f"{path}: line {lineno}: duplicate video id {vid!r}")
            seen.add(vid)

            def _path(key: str) -> Path | None:
                value = obj.get(key)
                if value is None:
                    return None
                if not isinstance(value, str):
                    raise ExportError(f"{path}: line {lineno}: {key} must be a string")
                return base / value

            entries.append(
                ManifestEntry(
                    id=vid,
                    split=str(obj.get("split", "")),
                    audio_path=_path("audio_path"),
                    tag_path=_path("tag_path"),
                    embedding_path=_path("embedding_path"),
                )
            )
    if not entries:
        raise ExportError(f"{path}: manifest has no videos")
    return entries
