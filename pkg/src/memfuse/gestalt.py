"""Audio gestalt scoring.

Four proxy features summarize high-level audio character:

* imageability -- 1 minus musicality (music is hard to picture; the two are
  strongly anti-correlated).
* hcu          -- human causal uncertainty, ingested as an external
  per-video prediction.
* arousal      -- likewise external.
* familiarity  -- the top audio-tag confidence.

Raw features are min-max normalized against statistics computed from a
designated split (train, to avoid evaluation leakage) and combined by a
weighted sum into the scalar gestalt score that gates fusion.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datamodel import GestaltFeatures, TagSet, format_real
from .errors import SchemaError

#: AudioSet's music hierarchy root label; extend via the ``music_labels``
#: argument for taggers with finer-grained vocabularies.
DEFAULT_MUSIC_LABELS = frozenset({"Music"})

#: A musical tag counts if its confidence reaches this fraction of the
#: set's top confidence.
MUSIC_CONFIDENCE_FRACTION = 0.75

FEATURE_NAMES = ("imageability", "hcu", "arousal", "familiarity")


@dataclass(frozen=True)
class GestaltWeights:
    """Non-negative weights over the four proxies, summing to 1."""

    imageability: float
    hcu: float
    arousal: float
    familiarity: float

    def __post_init__(self):
        for name in FEATURE_NAMES:
            w = getattr(self, name)
            if not (math.isfinite(w) and w >= 0.0):
                raise ValueError(f"weight {name} must be finite and >= 0, got {w!r}")
        total = sum(self.as_tuple())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"gestalt weights sum to {total!r}, expected 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.imageability, self.hcu, self.arousal, self.familiarity)

    @classmethod
    def paper(cls) -> "GestaltWeights":
        return cls(0.2, 0.2, 0.2, 0.4)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature (min, max) pairs plus the split they came from."""

    ranges: dict[str, tuple[float, float]]
    source_split: str

    def __post_init__(self):
        for name in FEATURE_NAMES:
            if name not in self.ranges:
                raise ValueError(f"missing range for feature {name!r}")
            lo, hi = self.ranges[name]
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"invalid range for {name!r}: ({lo!r}, {hi!r})")


def musicality(
    tags: TagSet,
    music_labels: frozenset[str] | set[str] = DEFAULT_MUSIC_LABELS,
    absolute: bool = False,
) -> float:
    """1.0 iff a musical tag sits in the top 75% confidence band.

    The band is relative to the set's maximum confidence by default (robust
    to tagger calibration shifts); ``absolute=True`` switches to a plain
    ``confidence >= 0.75`` reading.
    """
    if len(tags) == 0:
        return 0.0
    cutoff = MUSIC_CONFIDENCE_FRACTION * (1.0 if absolute else tags.top_confidence)
    for label, conf in tags:
        if label in music_labels and conf >= cutoff:
            return 1.0
    return 0.0


def imageability(musicality_score: float) -> float:
    """Music maps to low imageability and vice versa."""
    if musicality_score not in (0.0, 1.0):
        raise ValueError(f"musicality score must be 0 or 1, got {musicality_score!r}")
    return 1.0 - musicality_score


def familiarity(tags: TagSet) -> float:
    """Top audio-tag confidence; 0.0 for an empty tag set."""
    return tags.top_confidence


def features_from_tags(
    tags: TagSet,
    hcu: float,
    arousal: float,
    music_labels: frozenset[str] | set[str] = DEFAULT_MUSIC_LABELS,
    absolute_music_rule: bool = False,
) -> GestaltFeatures:
    """Assemble raw features from a tag set plus external hcu/arousal scores."""
    m = musicality(tags, music_labels, absolute=absolute_music_rule)
    return GestaltFeatures(
        imageability=imageability(m),
        hcu=hcu,
        arousal=arousal,
        familiarity=familiarity(tags),
        normalized=False,
    )


def compute_normalization_stats(
    features: dict[str, GestaltFeatures], source_split: str
) -> NormalizationStats:
    """Per-feature min/max over the given per-video features."""
    if not features:
        raise ValueError("cannot compute normalization stats from zero videos")
    ranges = {}
    for name in FEATURE_NAMES:
        values = [getattr(f, name) for f in features.values()]
        ranges[name] = (min(values), max(values))
    return NormalizationStats(ranges=ranges, source_split=source_split)


def normalize_features(
    raw: dict[str, GestaltFeatures], stats: NormalizationStats
) -> dict[str, GestaltFeatures]:
    """Min-max scale each feature into [0, 1], clamped.

    A degenerate feature (max == min in the stats) maps every video to 0.5.
    """
    out = {}
    for vid, f in raw.items():
        scaled = {}
        for name in FEATURE_NAMES:
            lo, hi = stats.ranges[name]
            if hi == lo:
                scaled[name] = 0.5
            else:
                x = (getattr(f, name) - lo) / (hi - lo)
                scaled[name] = min(1.0, max(0.0, x))
        out[vid] = GestaltFeatures(normalized=True, **scaled)
    return out


def gestalt_score(features: GestaltFeatures, weights: GestaltWeights) -> float:
    """Weighted sum of the normalized proxies; stays in [0, 1]."""
    if not features.normalized:
        raise ValueError("gestalt_score requires normalized features")
    f = features.as_tuple()
    w = weights.as_tuple()
    return w[0] * f[0] + w[1] * f[1] + w[2] * f[2] + w[3] * f[3]


def score_all(
    features: dict[str, GestaltFeatures], weights: GestaltWeights
) -> dict[str, float]:
    return {vid: gestalt_score(f, weights) for vid, f in features.items()}


def distribution_report(scores, n_bins: int) -> dict:
    """Histogram over [0, 1] with equal-width bins, plus mean and median.

    Out-of-range values are counted in the nearest end bin so counts always
    sum to the number of videos; a value of exactly 1.0 lands in the last bin.
    """
    arr = np.asarray(list(scores), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("distribution_report needs at least one score")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores must be finite")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.clip(np.floor(arr * n_bins).astype(int), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return {
        "bin_edges": edges.tolist(),
        "counts": counts.tolist(),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
    }


def full_report(
    features: dict[str, GestaltFeatures],
    scores: dict[str, float],
    n_bins: int = 20,
) -> dict:
    """Distribution report for the gestalt score and each feature."""
    report = {"n_videos": len(scores), "gestalt": distribution_report(list(scores.values()), n_bins)}
    for name in FEATURE_NAMES:
        report[name] = distribution_report(
            [getattr(f, name) for f in features.values()], n_bins
        )
    return report


# ---------------------------------------------------------------------------
# file formats

_FEATURE_HEADER = ("video_id",) + FEATURE_NAMES


def load_feature_csv(
    path: str | Path, normalized: bool = False
) -> dict[str, GestaltFeatures]:
    """Gestalt feature file: ``video_id,imageability,hcu,arousal,familiarity``.

    Pass ``normalized=True`` when the file holds already-scaled features;
    values are then validated against [0, 1].
    """
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"gestalt feature file not found: {path}")
    out: dict[str, GestaltFeatures] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty header") from None
        if tuple(header) != _FEATURE_HEADER:
            raise SchemaError(
                f"{path}: header must be {','.join(_FEATURE_HEADER)}, got {','.join(header)}"
            )
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise SchemaError(f"{path}: row {rowno}: expected 5 cells")
            vid = row[0]
            if vid in out:
                raise SchemaError(f"{path}: row {rowno}: duplicate video_id {vid!r}")
            try:
                values = [float(x) for x in row[1:]]
            except ValueError:
                raise SchemaError(f"{path}: row {rowno}: non-numeric cell") from None
            try:
                out[vid] = GestaltFeatures(*values, normalized=normalized)
            except ValueError as exc:
                raise SchemaError(f"{path}: row {rowno}: {exc}") from exc
    return out


def write_feature_csv(features: dict[str, GestaltFeatures], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FEATURE_HEADER)
        for vid, f in features.items():
            writer.writerow([vid] + [format_real(v) for v in f.as_tuple()])


def load_score_csv(path: str | Path) -> dict[str, float]:
    """Scalar gestalt score file: ``video_id,gestalt``."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"gestalt score file not found: {path}")
    out: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty header") from None
        if tuple(header) != ("video_id", "gestalt"):
            raise SchemaError(f"{path}: header must be video_id,gestalt")
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(f"{path}: row {rowno}: expected 2 cells")
            vid = row[0]
            if vid in out:
                raise SchemaError(f"{path}: row {rowno}: duplicate video_id {vid!r}")
            try:
                score = float(row[1])
            except ValueError:
                raise SchemaError(f"{path}: row {rowno}: non-numeric gestalt score") from None
            if not (math.isfinite(score) and 0.0 <= score <= 1.0):
                raise SchemaError(f"{path}: row {rowno}: gestalt score outside [0, 1]")
            out[vid] = score
    return out


def write_score_csv(scores: dict[str, float], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("video_id", "gestalt"))
        for vid, score in scores.items():
            writer.writerow([vid, format_real(score)])


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2), encoding="utf-8")


__all__ = [
    "DEFAULT_MUSIC_LABELS",
    "FEATURE_NAMES",
    "GestaltWeights",
    "NormalizationStats",
    "musicality",
    "imageability",
    "familiarity",
    "features_from_tags",
    "compute_normalization_stats",
    "normalize_features",
    "gestalt_score",
    "score_all",
    "distribution_report",
    "full_report",
    "load_feature_csv",
    "write_feature_csv",
    "load_score_csv",
    "write_score_csv",
    "write_report",
]
