"""Gestalt-gated late fusion of per-component memorability predictions.

Every video gets exactly one fused score.  The gestalt score picks the
pathway: at or above the threshold the with-audio weights apply, below it
the without-audio weights apply.  Within a pathway the fused score is the
plain weighted sum of the component predictions, accumulated in the weight
mapping's insertion order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .datamodel import (
    AUDIO_PLACEHOLDER,
    PredictionTable,
    VideoRecord,
    format_real,
)
from .errors import SchemaError
from .metrics import spearman

WITH_AUDIO = "with_audio"
WITHOUT_AUDIO = "without_audio"


def route(gestalt: float, threshold: float) -> str:
    """Pathway for one video; the boundary case goes to the audio pathway."""
    if not math.isfinite(gestalt):
        raise ValueError(f"non-finite gestalt score {gestalt!r}")
    return WITH_AUDIO if gestalt >= threshold else WITHOUT_AUDIO


def fuse_weighted(components: Mapping[str, float], weights: Mapping[str, float]) -> float:
    """Weighted sum over the weight mapping, in its insertion order.

    Components not named by a weight are ignored; a weighted component
    missing from ``components`` is an error.
    """
    total = 0.0
    for name, weight in weights.items():
        if name not in components:
            raise SchemaError(f"missing component prediction: {name!r}")
        value = components[name]
        if not math.isfinite(value):
            raise ValueError(f"non-finite prediction for component {name!r}")
        total += weight * value
    return total


def resolve_components(cfg, pathway: str) -> dict[str, str]:
    """Map pathway weight names to prediction-table column names.

    The ``audio`` placeholder resolves to the configured audio component,
    and ``aug_caption`` falls back to the plain ``caption`` column when the
    config says to fuse un-augmented captions.
    """
    if pathway == WITHOUT_AUDIO:
        names = cfg.without_audio_weights
    elif pathway == WITH_AUDIO:
        names = cfg.with_audio_weights
    else:
        raise ValueError(f"unknown pathway {pathway!r}")
    mapping = {}
    for name in names:
        column = name
        if name == AUDIO_PLACEHOLDER:
            column = cfg.audio_component
        elif name == "aug_caption" and cfg.plain_captions:
            column = "caption"
        mapping[name] = column
    return mapping


@dataclass(frozen=True)
class FusedPrediction:
    video_id: str
    gestalt: float
    pathway: str
    score: float


def predict_one(
    video_id: str,
    gestalt: float,
    table: PredictionTable,
    cfg,
    threshold: float | None = None,
) -> FusedPrediction:
    """Fuse one video.

    ``threshold`` overrides ``cfg.gestalt_threshold`` when given; unlike the
    config field it may sit outside [0, 1], which degenerately forces a single
    pathway (useful for sweeps and always/never-audio baselines).
    """
    if threshold is None:
        threshold = cfg.gestalt_threshold
    pathway = route(gestalt, threshold)
    weights = (
        cfg.with_audio_weights if pathway == WITH_AUDIO else cfg.without_audio_weights
    )
    columns = resolve_components(cfg, pathway)
    components: dict[str, float] = {}
    for name, column in columns.items():
        cell = table.get(video_id, column)
        if cell is None:
            raise SchemaError(
                f"video {video_id!r}: no {column!r} prediction for the "
                f"{pathway} pathway"
            )
        components[name] = cell
    return FusedPrediction(
        video_id=video_id,
        gestalt=gestalt,
        pathway=pathway,
        score=fuse_weighted(components, weights),
    )


def predict_all(
    ids: list[str],
    gestalt_scores: Mapping[str, float],
    table: PredictionTable,
    cfg,
    threshold: float | None = None,
) -> list[FusedPrediction]:
    out = []
    for vid in ids:
        if vid not in gestalt_scores:
            raise SchemaError(f"video {vid!r} has no gestalt score")
        out.append(predict_one(vid, gestalt_scores[vid], table, cfg, threshold))
    return out


FUSED_HEADER = ["video_id", "gestalt", "pathway", "fused_score"]


def fused_csv_text(predictions: list[FusedPrediction]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FUSED_HEADER)
    for p in predictions:
        writer.writerow(
            [p.video_id, format_real(p.gestalt), p.pathway, format_real(p.score)]
        )
    return buf.getvalue()


def write_fused(predictions: list[FusedPrediction], path: str | Path) -> None:
    Path(path).write_text(fused_csv_text(predictions), encoding="utf-8")


def load_fused(path: str | Path) -> list[FusedPrediction]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FUSED_HEADER:
            raise SchemaError(f"{path}: expected header {','.join(FUSED_HEADER)}")
        out = []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise SchemaError(f"{path}: row {rowno}: expected 4 cells")
            vid, gestalt_s, pathway, score_s = row
            if pathway not in (WITH_AUDIO, WITHOUT_AUDIO):
                raise SchemaError(f"{path}: row {rowno}: unknown pathway {pathway!r}")
            try:
                gestalt, score = float(gestalt_s), float(score_s)
            except ValueError:
                raise SchemaError(f"{path}: row {rowno}: non-numeric cell") from None
            out.append(FusedPrediction(vid, gestalt, pathway, score))
    return out


@dataclass(frozen=True)
class EvaluationResult:
    rho: float
    n_used: int
    n_skipped: int


def evaluate(
    records: list[VideoRecord], predictions: list[FusedPrediction]
) -> EvaluationResult:
    """Rank correlation of fused scores against ground-truth scores.

    Records without a ground-truth score are skipped (counted), as are
    records with no fused prediction.
    """
    by_id = {p.video_id: p.score for p in predictions}
    truth, predicted, skipped = [], [], 0
    for rec in records:
        if rec.mem_score is None or rec.id not in by_id:
            skipped += 1
            continue
        truth.append(rec.mem_score)
        predicted.append(by_id[rec.id])
    if len(truth) < 2:
        raise ValueError(
            f"need at least 2 scored videos with predictions, got {len(truth)}"
        )
    return EvaluationResult(
        rho=spearman(truth, predicted), n_used=len(truth), n_skipped=skipped
    )


__all__ = [
    "WITH_AUDIO",
    "WITHOUT_AUDIO",
    "FUSED_HEADER",
    "fused_csv_text",
    "FusedPrediction",
    "EvaluationResult",
    "route",
    "fuse_weighted",
    "resolve_components",
    "predict_one",
    "predict_all",
    "write_fused",
    "load_fused",
    "evaluate",
]
