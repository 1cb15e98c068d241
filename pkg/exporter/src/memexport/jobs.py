"""Batch export jobs: run a named model over a manifest, write engine files.

Every job walks the manifest in order, handles each video independently and
collects a report::

    {"op": ..., "model": ..., "device": ..., "written": [ids],
     "errors": [{"id":..., "error":...}], "skipped": [{"id":..., "reason":...}]}

A video that cannot be processed (undecodable audio, missing frames or
caption) becomes an ``errors`` entry and the job moves on; videos the job
does not apply to (e.g. no audio path) are ``skipped``.  Output files use the
engine's formats: tag JSON arrays, ``video_id,e0..eN`` embedding CSVs,
``video_id,<component>,...`` prediction CSVs with empty cells for missing
values, and a ``video_id,hcu,arousal`` feature CSV.  Reals carry 17
significant digits so a write/load cycle is bit-exact.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

from . import models, wav
from .errors import ExportError
from .manifest import ManifestEntry, read_manifest


@dataclass(frozen=True)
class ExportJob:
    """One batch export: which manifest, which model, where the output goes.

    ``device`` is a hint recorded in the report; the built-in models are pure
    CPU and ignore it, heavyweight adapters may not.
    """

    manifest: str | Path
    model: str
    output: str | Path
    device: str = "cpu"


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        raise ExportError(f"refusing to write non-finite value {x!r}")
    return f"{x:.17g}"


def _new_report(op: str, job: ExportJob) -> dict:
    return {
        "op": op,
        "model": job.model,
        "device": job.device,
        "written": [],
        "errors": [],
        "skipped": [],
    }


def _decodable(entry: ManifestEntry, report: dict):
    """Load a video's audio, or file the failure and return None."""
    if entry.audio_path is None:
        report["skipped"].append({"id": entry.id, "reason": "no audio path"})
        return None
    try:
        return wav.decode(entry.audio_path)
    except ExportError as exc:
        report["errors"].append({"id": entry.id, "error": str(exc)})
        return None


def write_report(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# tags


def export_tags(job: ExportJob, top_n: int = 5) -> dict:
    """Write one ``<output>/<video_id>.json`` tag file per decodable video."""
    tagger = models.get_model("tagger", job.model)
    entries = read_manifest(job.manifest)
    out_dir = Path(job.output)
    os.makedirs(out_dir, exist_ok=True)
    report = _new_report("tags", job)
    for entry in entries:
        decoded = _decodable(entry, report)
        if decoded is None:
            continue
        samples, rate = decoded
        ranked = tagger.tag(samples, rate, top_n=top_n)
        payload = [{"label": label, "confidence": conf} for label, conf in ranked]
        with open(out_dir / f"{entry.id}.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        report["written"].append(entry.id)
    return report


def _load_tag_file(path: Path) -> list[tuple[str, float]]:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ExportError(f"tag file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ExportError(f"{path}: bad JSON ({exc})") from None
    if not isinstance(payload, list):
        raise ExportError(f"{path}: expected a JSON array of tags")
    tags = []
    for item in payload:
        if not isinstance(item, dict) or "label" not in item or "confidence" not in item:
            raise ExportError(f"{path}: malformed tag entry {item!r}")
        tags.append((str(item["label"]), float(item["confidence"])))
    return tags


# ---------------------------------------------------------------------------
# embeddings


def export_embeddings(job: ExportJob) -> dict:
    """Write one embedding CSV (``video_id,e0..eN``) over all decodable videos."""
    embedder = models.get_model("embedder", job.model)
    entries = read_manifest(job.manifest)
    report = _new_report("embeddings", job)
    rows: list[tuple[str, list[str]]] = []
    for entry in entries:
        decoded = _decodable(entry, report)
        if decoded is None:
            continue
        samples, rate = decoded
        vector = embedder.embed(samples, rate)
        rows.append((entry.id, [_fmt(v) for v in vector]))
        report["written"].append(entry.id)
    with open(job.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["video_id"] + [f"e{i}" for i in range(embedder.width)])
        for vid, cells in rows:
            writer.writerow([vid] + cells)
    return report


# ---------------------------------------------------------------------------
# predictions


def _read_predictions(path: Path) -> tuple[list[str], dict[str, dict[str, str]]]:
    """Existing predictions CSV as (component order, id -> component -> cell).

    Cells are kept as raw strings so merging never reformats another
    component's numbers.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "video_id":
            raise ExportError(f"{path}: first column must be video_id")
        components = header[1:]
        table: dict[str, dict[str, str]] = {}
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ExportError(f"{path}: ragged row for {row[0]!r}")
            table[row[0]] = {c: cell for c, cell in zip(components, row[1:]) if cell}
    return components, table


def _write_predictions(
    path: Path, components: list[str], table: dict[str, dict[str, str]]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["video_id"] + components)
        for vid, cells in table.items():
            writer.writerow([vid] + [cells.get(c, "") for c in components])


def _score_frames(model, frames_dir: Path, entry: ManifestEntry) -> float:
    video_dir = frames_dir / entry.id
    names = sorted(p.name for p in video_dir.glob("*.pgm")) if video_dir.is_dir() else []
    if not names:
        raise ExportError(f"no frames under {video_dir}")
    first, middle, last = models.pick_three(names)
    return models.mean_of_three(
        model.score_frame(video_dir / first),
        model.score_frame(video_dir / middle),
        model.score_frame(video_dir / last),
    )


def _read_caption(captions_dir: Path, entry: ManifestEntry) -> str:
    path = captions_dir / f"{entry.id}.txt"
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ExportError(f"caption not found: {path}") from None


def export_predictions(
    job: ExportJob,
    component: str,
    frames_dir: str | Path | None = None,
    captions_dir: str | Path | None = None,
    tags_dir: str | Path | None = None,
) -> dict:
    """Score one component per video and merge the column into ``job.output``.

    ``frame`` needs ``frames_dir`` (PGM frames under ``<frames_dir>/<id>/``);
    the video score is the mean over the first, middle and last frame of the
    sorted listing.  ``caption`` needs ``captions_dir`` with ``<id>.txt``
    files.  ``aug_caption`` additionally needs ``tags_dir`` with the tag JSON
    written by :func:`export_tags`; the caption is scored after appending the
    top tag labels (see LexicalCaptionModel.augment).  An existing output CSV
    is merged into, preserving other components' cells byte-for-byte.
    """
    if component == "frame":
        if frames_dir is None:
            raise ExportError("frame predictions need a frames directory")
        model = models.get_model("frame", job.model)
    elif component in ("caption", "aug_caption"):
        if captions_dir is None:
            raise ExportError(f"{component} predictions need a captions directory")
        if component == "aug_caption" and tags_dir is None:
            raise ExportError("aug_caption predictions need a tags directory")
        model = models.get_model("caption", job.model)
    else:
        raise ExportError(f"unknown prediction component {component!r}")

    entries = read_manifest(job.manifest)
    report = _new_report(f"predictions:{component}", job)
    scores: dict[str, float] = {}
    for entry in entries:
        try:
            if component == "frame":
                scores[entry.id] = _score_frames(model, Path(frames_dir), entry)
            else:
                text = _read_caption(Path(captions_dir), entry)
                if component == "aug_caption":
                    tags = _load_tag_file(Path(tags_dir) / f"{entry.id}.json")
                    text = model.augment(text, [label for label, _ in tags])
                scores[entry.id] = model.score_text(text)
        except ExportError as exc:
            report["errors"].append({"id": entry.id, "error": str(exc)})
            continue
        report["written"].append(entry.id)

    out = Path(job.output)
    if out.is_file():
        components, table = _read_predictions(out)
    else:
        components, table = [], {}
    if component not in components:
        components.append(component)
    for vid, score in scores.items():
        table.setdefault(vid, {})[component] = _fmt(score)
    _write_predictions(out, components, table)
    return report


# ---------------------------------------------------------------------------
# gestalt feature inputs


def export_features(job: ExportJob, tags_dir: str | Path) -> dict:
    """Write a ``video_id,hcu,arousal`` CSV from per-video tag files."""
    model = models.get_model("features", job.model)
    entries = read_manifest(job.manifest)
    report = _new_report("features", job)
    rows: list[tuple[str, float, float]] = []
    for entry in entries:
        try:
            tags = _load_tag_file(Path(tags_dir) / f"{entry.id}.json")
        except ExportError as exc:
            report["errors"].append({"id": entry.id, "error": str(exc)})
            continue
        hcu, arousal = model.features(tags)
        rows.append((entry.id, hcu, arousal))
        report["written"].append(entry.id)
    with open(job.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["video_id", "hcu", "arousal"])
        for vid, hcu, arousal in rows:
            writer.writerow([vid, _fmt(hcu), _fmt(arousal)])
    return report
