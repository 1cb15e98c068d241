"""Shared domain types and dataset file ingestion.

File formats (all text, canonical; reals written with 17 significant digits
so a write/load cycle is bit-exact):

* manifest   -- JSON Lines, one video per line:
                ``{"id": ..., "split": ..., "mem_score": ..., "audio_path": ...,
                "tag_path": ..., "embedding_path": ...}``.
                Path fields are optional and stored verbatim (resolve against
                the manifest directory with :func:`resolve_path`).
* predictions -- CSV, header ``video_id,<component>,...``; empty cells mean
                "missing", never zero.
* tags        -- JSON array of ``{"label": ..., "confidence": ...}``; order on
                disk is irrelevant, a :class:`TagSet` sorts on load.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError

log = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")

#: Component columns the fusion pathways know about; prediction tables may
#: carry arbitrary extra columns on top of these.
KNOWN_COMPONENTS = ("frame", "caption", "aug_caption", "spectrogram", "bayesian_ridge")

AUDIO_COMPONENTS = ("spectrogram", "bayesian_ridge")

#: Placeholder key in with-audio weight maps, resolved to the configured
#: audio component column at fusion time.
AUDIO_PLACEHOLDER = "audio"

WEIGHT_SUM_TOL = 1e-9


def format_real(x: float) -> str:
    """Serialize a real with 17 significant digits (binary64 round-trip safe)."""
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return f"{x:.17g}"


@dataclass(frozen=True)
class VideoRecord:
    """One video's identity, split, ground truth and file references."""

    id: str
    split: str
    mem_score: float | None = None
    audio_path: str | None = None
    tag_path: str | None = None
    embedding_path: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("video id must be a non-empty string")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}, expected one of {SPLITS}")
        if self.mem_score is not None:
            if not math.isfinite(self.mem_score) or not 0.0 <= self.mem_score <= 1.0:
                raise ValueError(f"mem_score {self.mem_score!r} outside [0, 1]")


@dataclass(frozen=True)
class TagSet:
    """Ranked audio tags, sorted by confidence descending on construction."""

    tags: tuple[tuple[str, float], ...]

    def __post_init__(self):
        for label, conf in self.tags:
            if not isinstance(label, str) or not label:
                raise ValueError(f"tag label must be a non-empty string, got {label!r}")
            if not (isinstance(conf, (int, float)) and math.isfinite(conf) and 0.0 <= conf <= 1.0):
                raise ValueError(f"tag confidence {conf!r} outside [0, 1]")
        ordered = tuple(sorted(self.tags, key=lambda t: -t[1]))
        object.__setattr__(self, "tags", ordered)

    def __len__(self) -> int:
        return len(self.tags)

    def __iter__(self):
        return iter(self.tags)

    @property
    def top_confidence(self) -> float:
        """Highest confidence in the set, 0.0 when empty."""
        return self.tags[0][1] if self.tags else 0.0


@dataclass(frozen=True)
class GestaltFeatures:
    """The four per-video gestalt proxy scores.

    ``normalized`` marks values already min-max scaled into [0, 1]; raw hcu
    and arousal predictions are unbounded.
    """

    imageability: float
    hcu: float
    arousal: float
    familiarity: float
    normalized: bool = False

    _FIELDS = ("imageability", "hcu", "arousal", "familiarity")

    def __post_init__(self):
        for name in self._FIELDS:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        for name in ("imageability", "familiarity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v!r} outside [0, 1]")
        if self.normalized:
            for name in self._FIELDS:
                v = getattr(self, name)
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"normalized {name} {v!r} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.imageability, self.hcu, self.arousal, self.familiarity)


def _validate_weight_map(name: str, weights: dict[str, float]) -> None:
    if not weights:
        raise ValueError(f"{name}: weight map must not be empty")
    for comp, w in weights.items():
        if not comp:
            raise ValueError(f"{name}: component names must be non-empty")
        if not (math.isfinite(w) and w >= 0.0):
            raise ValueError(f"{name}: weight for {comp!r} must be >= 0, got {w!r}")
    total = sum(weights.values())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"{name}: weights sum to {total!r}, expected 1")


@dataclass(frozen=True)
class FusionConfig:
    """Everything the gated fusion needs: gestalt weights and threshold plus
    the per-pathway component weights.

    ``with_audio_weights`` may use the placeholder key ``"audio"``, resolved
    to ``audio_component`` when fusing.  ``plain_captions`` swaps the
    with-audio pathway's ``aug_caption`` column for plain ``caption``.
    """

    gestalt_weights: tuple[float, float, float, float]
    gestalt_threshold: float
    without_audio_weights: dict[str, float]
    with_audio_weights: dict[str, float]
    audio_component: str = "spectrogram"
    plain_captions: bool = False

    def __post_init__(self):
        gw = tuple(float(w) for w in self.gestalt_weights)
        if len(gw) != 4:
            raise ValueError("gestalt_weights must have exactly 4 entries")
        object.__setattr__(self, "gestalt_weights", gw)
        _validate_weight_map("gestalt_weights", dict(zip("ihaf", gw)))
        if not (math.isfinite(self.gestalt_threshold) and 0.0 <= self.gestalt_threshold <= 1.0):
            raise ValueError(f"gestalt_threshold {self.gestalt_threshold!r} outside [0, 1]")
        _validate_weight_map("without_audio_weights", self.without_audio_weights)
        _validate_weight_map("with_audio_weights", self.with_audio_weights)
        if self.audio_component not in AUDIO_COMPONENTS:
            raise ValueError(
                f"audio_component {self.audio_component!r} not one of {AUDIO_COMPONENTS}"
            )

    @classmethod
    def paper(cls, audio_component: str = "spectrogram") -> "FusionConfig":
        """The published operating point: threshold 0.8, without-audio
        weights frame 0.38 / caption 0.62, with-audio weights frame 0.4 /
        aug_caption 0.47 / audio 0.13, gestalt weights 0.2/0.2/0.2/0.4."""
        return cls(
            gestalt_weights=(0.2, 0.2, 0.2, 0.4),
            gestalt_threshold=0.8,
            without_audio_weights={"frame": 0.38, "caption": 0.62},
            with_audio_weights={"frame": 0.4, "aug_caption": 0.47, AUDIO_PLACEHOLDER: 0.13},
            audio_component=audio_component,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "gestalt_weights": list(self.gestalt_weights),
                "gestalt_threshold": self.gestalt_threshold,
                "without_audio_weights": self.without_audio_weights,
                "with_audio_weights": self.with_audio_weights,
                "audio_component": self.audio_component,
                "plain_captions": self.plain_captions,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "FusionConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"fusion config is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise SchemaError("fusion config must be a JSON object")
        try:
            return cls(
                gestalt_weights=tuple(obj["gestalt_weights"]),
                gestalt_threshold=float(obj["gestalt_threshold"]),
                without_audio_weights={k: float(v) for k, v in obj["without_audio_weights"].items()},
                with_audio_weights={k: float(v) for k, v in obj["with_audio_weights"].items()},
                audio_component=obj.get("audio_component", "spectrogram"),
                plain_captions=bool(obj.get("plain_captions", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid fusion config: {exc}") from exc


class PredictionTable:
    """Per-video named component predictions.

    Rows are keyed by video id, columns by component name.  Absent cells are
    genuinely missing (``get`` returns ``None``); every stored cell is finite.
    Row order is preserved from the source.
    """

    def __init__(self, components: tuple[str, ...] | list[str]):
        if not components:
            raise ValueError("a prediction table needs at least one component column")
        if len(set(components)) != len(components):
            raise ValueError("duplicate component names in header")
        self.components: tuple[str, ...] = tuple(components)
        self._rows: dict[str, dict[str, float]] = {}

    def add_row(self, video_id: str, cells: dict[str, float]) -> None:
        if not video_id:
            raise ValueError("video_id must be non-empty")
        if video_id in self._rows:
            raise SchemaError(f"duplicate video_id {video_id!r}")
        row = {}
        for comp, value in cells.items():
            if comp not in self.components:
                raise ValueError(f"unknown component {comp!r} for row {video_id!r}")
            value = float(value)
            if not math.isfinite(value):
                raise SchemaError(f"non-finite prediction for {video_id!r}/{comp!r}")
            row[comp] = value
        self._rows[video_id] = row

    @property
    def ids(self) -> list[str]:
        return list(self._rows)

    def __len__(self) -> int:
        return len(self._rows)

    def __contains__(self, video_id: str) -> bool:
        return video_id in self._rows

    def get(self, video_id: str, component: str) -> float | None:
        row = self._rows.get(video_id)
        return None if row is None else row.get(component)

    def row(self, video_id: str) -> dict[str, float]:
        return dict(self._rows[video_id])

    def cell_count(self) -> int:
        """Number of non-missing cells."""
        return sum(len(r) for r in self._rows.values())


# ---------------------------------------------------------------------------
# manifest

_MANIFEST_KEYS = ("audio_path", "tag_path", "embedding_path")


def load_manifest(path: str | Path) -> list[VideoRecord]:
    """Parse a JSON Lines manifest; any malformed line rejects the file."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"manifest not found: {path}")
    records: list[VideoRecord] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise SchemaError(f"{path}: line {lineno}: expected a JSON object")
            try:
                rec = _record_from_obj(obj)
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from exc
            if rec.id in seen:
                raise SchemaError(
                    f"{path}: line {lineno}: duplicate id {rec.id!r}"
                    f" (first seen on line {seen[rec.id]})"
                )
            seen[rec.id] = lineno
            records.append(rec)
    return records


def _record_from_obj(obj: dict) -> VideoRecord:
    vid = obj.get("id")
    if not isinstance(vid, str) or not vid:
        raise ValueError(f"field id: expected non-empty string, got {vid!r}")
    split = obj.get("split")
    if split not in SPLITS:
        raise ValueError(f"field split: unknown value {split!r}")
    score = obj.get("mem_score")
    if score is not None:
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise ValueError(f"field mem_score: expected a number, got {score!r}")
        score = float(score)
        if not math.isfinite(score) or not 0.0 <= score <= 1.0:
            raise ValueError(f"field mem_score: {score!r} outside [0, 1]")
    paths = {}
    for key in _MANIFEST_KEYS:
        value = obj.get(key)
        if value is not None and not isinstance(value, str):
            raise ValueError(f"field {key}: expected a string, got {value!r}")
        paths[key] = value
    return VideoRecord(id=vid, split=split, mem_score=score, **paths)


def write_manifest(records: list[VideoRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            parts = [f'"id": {json.dumps(rec.id)}', f'"split": "{rec.split}"']
            if rec.mem_score is not None:
                parts.append(f'"mem_score": {format_real(rec.mem_score)}')
            for key in _MANIFEST_KEYS:
                value = getattr(rec, key)
                if value is not None:
                    parts.append(f'"{key}": {json.dumps(value)}')
            fh.write("{" + ", ".join(parts) + "}\n")


def resolve_path(manifest_path: str | Path, ref: str) -> Path:
    """Resolve a manifest-relative file reference."""
    ref_path = Path(ref)
    if ref_path.is_absolute():
        return ref_path
    return Path(manifest_path).parent / ref_path


# ---------------------------------------------------------------------------
# predictions

def load_predictions(path: str | Path) -> PredictionTable:
    """Parse a predictions CSV; empty cells become missing, never zero."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"predictions file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty header") from None
        if not header or header[0] != "video_id":
            raise SchemaError(f"{path}: header must start with 'video_id'")
        components = header[1:]
        if not components:
            raise SchemaError(f"{path}: header names no component columns")
        table = PredictionTable(components)
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {rowno}: expected {len(header)} cells, got {len(row)}"
                )
            vid = row[0]
            cells = {}
            for comp, text in zip(components, row[1:]):
                if text == "":
                    continue
                try:
                    value = float(text)
                except ValueError:
                    raise SchemaError(
                        f"{path}: row {rowno}: non-numeric cell {text!r} in column {comp!r}"
                    ) from None
                if not math.isfinite(value):
                    raise SchemaError(
                        f"{path}: row {rowno}: non-finite cell {text!r} in column {comp!r}"
                    )
                cells[comp] = value
            try:
                table.add_row(vid, cells)
            except SchemaError as exc:
                raise SchemaError(f"{path}: row {rowno}: {exc}") from exc
    return table


def write_predictions(table: PredictionTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("video_id",) + table.components)
        for vid in table.ids:
            row = table.row(vid)
            writer.writerow(
                [vid] + [format_real(row[c]) if c in row else "" for c in table.components]
            )


def join_ids(records: list[VideoRecord], table: PredictionTable) -> list[str]:
    """Manifest-ordered ids present in the table.

    Prediction rows without a manifest counterpart are tolerated (exporters
    may emit supersets) but excluded here, with a counted warning.
    """
    manifest_ids = {r.id for r in records}
    extra = [vid for vid in table.ids if vid not in manifest_ids]
    if extra:
        log.warning(
            "%d prediction row(s) have no manifest counterpart and are excluded from the join",
            len(extra),
        )
    return [r.id for r in records if r.id in table]


# ---------------------------------------------------------------------------
# tags

def load_tags(path: str | Path) -> TagSet:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"tag file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, list):
        raise SchemaError(f"{path}: expected a JSON array of tags")
    tags = []
    for i, entry in enumerate(obj):
        if not isinstance(entry, dict) or "label" not in entry or "confidence" not in entry:
            raise SchemaError(f"{path}: tag {i}: expected {{label, confidence}}")
        label, conf = entry["label"], entry["confidence"]
        if isinstance(conf, bool) or not isinstance(conf, (int, float)):
            raise SchemaError(f"{path}: tag {i}: confidence must be a number")
        tags.append((label, float(conf)))
    try:
        return TagSet(tuple(tags))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def write_tags(tags: TagSet, path: str | Path) -> None:
    payload = [{"label": lbl, "confidence": conf} for lbl, conf in tags]
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


__all__ = [
    "SPLITS",
    "KNOWN_COMPONENTS",
    "AUDIO_COMPONENTS",
    "AUDIO_PLACEHOLDER",
    "VideoRecord",
    "TagSet",
    "GestaltFeatures",
    "FusionConfig",
    "PredictionTable",
    "format_real",
    "load_manifest",
    "write_manifest",
    "resolve_path",
    "load_predictions",
    "write_predictions",
    "join_ids",
    "load_tags",
    "write_tags",
]
