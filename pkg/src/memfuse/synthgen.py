"""Synthetic datasets with planted structure for end-to-end engine checks.

Two constructions:

* :func:`generate` — every component is a noisy view of a uniform ground
  truth, except that audio components carry signal only for videos whose
  (uniformly drawn) gestalt score reaches ``gestalt_split``; below it they
  are pure noise.  Augmented captions degrade below the split and sharpen
  above it, so a gate at the split beats both all-audio and no-audio fusion.
* :func:`generate_weight_plant` — ground truth IS a fixed weighted sum of
  iid uniform components, so a weight search has a known exact optimum.

Both are pure functions of their :class:`SynthSpec` (fixed draw order,
seeded generator) and emit the same manifest/CSV shapes as the real data
loaders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .datamodel import (
    KNOWN_COMPONENTS,
    PredictionTable,
    VideoRecord,
    write_manifest,
    write_predictions,
)
from .gestalt import write_score_csv

PREDICTION_CLIP = (-0.5, 1.5)

# Per-component noise scale; audio components additionally lose all signal
# below the gestalt split.  Captions beat frames beat raw audio.
DEFAULT_NOISE = {
    "frame": 0.25,
    "caption": 0.20,
    "spectrogram": 0.35,
    "bayesian_ridge": 0.35,
}

# Augmented captions are caption+audio-tag text, so their quality tracks how
# informative the audio is: below the split the tag words are distracting
# (noisier than plain captions), above it they help (less noisy).
DEFAULT_AUG_CAPTION_NOISE_BELOW = 0.24
DEFAULT_AUG_CAPTION_NOISE_ABOVE = 0.16


def _check_simplex(name: str, weights: Mapping[str, float]) -> None:
    if not weights:
        raise ValueError(f"{name}: planted weight map must not be empty")
    if any(not (math.isfinite(w) and w >= 0) for w in weights.values()):
        raise ValueError(f"{name}: weights must be >= 0 and finite")
    if abs(sum(weights.values()) - 1.0) > 1e-9:
        raise ValueError(f"{name}: weights must sum to 1")


@dataclass(frozen=True)
class SynthSpec:
    n_videos: int
    seed: int = 0
    gestalt_split: float = 0.8
    noise: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE))
    aug_caption_noise_below: float = DEFAULT_AUG_CAPTION_NOISE_BELOW
    aug_caption_noise_above: float = DEFAULT_AUG_CAPTION_NOISE_ABOVE
    without_audio_weights: dict[str, float] = field(
        default_factory=lambda: {"frame": 0.38, "caption": 0.62}
    )
    with_audio_weights: dict[str, float] = field(
        default_factory=lambda: {"frame": 0.4, "aug_caption": 0.47, "audio": 0.13}
    )

    def __post_init__(self):
        if self.n_videos < 20:
            raise ValueError("n_videos must be >= 20")
        if not (math.isfinite(self.gestalt_split) and 0.0 <= self.gestalt_split <= 1.0):
            raise ValueError(f"gestalt_split {self.gestalt_split!r} outside [0, 1]")
        for name in ("frame", "caption", "spectrogram", "bayesian_ridge"):
            if name not in self.noise:
                raise ValueError(f"noise map missing {name!r}")
        levels = list(self.noise.values()) + [
            self.aug_caption_noise_below,
            self.aug_caption_noise_above,
        ]
        if any(not (math.isfinite(s) and s >= 0) for s in levels):
            raise ValueError("noise levels must be >= 0 and finite")
        _check_simplex("without_audio_weights", self.without_audio_weights)
        _check_simplex("with_audio_weights", self.with_audio_weights)


@dataclass(frozen=True)
class SynthDataset:
    records: list[VideoRecord]
    table: PredictionTable
    gestalt_scores: dict[str, float]

    @property
    def ground_truth(self) -> dict[str, float]:
        return {r.id: r.mem_score for r in self.records}


def _ids(n: int) -> list[str]:
    return [f"synth-{i:05d}" for i in range(n)]


def generate(spec: SynthSpec) -> SynthDataset:
    """Gestalt-split construction.  Draw order (fixed for reproducibility):
    ground truth, gestalt scores, then per-component noise in
    frame/caption/aug_caption/spectrogram/bayesian_ridge order, audio
    components drawing their replacement noise right after their signal noise.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_videos
    lo, hi = PREDICTION_CLIP

    gt = rng.uniform(0.0, 1.0, size=n)
    gestalt = rng.uniform(0.0, 1.0, size=n)
    below = gestalt < spec.gestalt_split

    columns: dict[str, np.ndarray] = {}
    for name in ("frame", "caption"):
        eps = rng.standard_normal(n)
        columns[name] = np.clip(gt + spec.noise[name] * eps, lo, hi)
    eps = rng.standard_normal(n)
    sigma = np.where(
        below, spec.aug_caption_noise_below, spec.aug_caption_noise_above
    )
    columns["aug_caption"] = np.clip(gt + sigma * eps, lo, hi)
    for name in ("spectrogram", "bayesian_ridge"):
        eps = rng.standard_normal(n)
        pure = rng.uniform(0.0, 1.0, size=n)
        signal = np.clip(gt + spec.noise[name] * eps, lo, hi)
        columns[name] = np.where(below, pure, signal)

    ids = _ids(n)
    records = [
        VideoRecord(id=vid, split="train", mem_score=float(score))
        for vid, score in zip(ids, gt)
    ]
    table = PredictionTable(KNOWN_COMPONENTS)
    for i, vid in enumerate(ids):
        table.add_row(vid, {name: float(columns[name][i]) for name in KNOWN_COMPONENTS})
    scores = {vid: float(g) for vid, g in zip(ids, gestalt)}
    return SynthDataset(records=records, table=table, gestalt_scores=scores)


def generate_weight_plant(spec: SynthSpec) -> SynthDataset:
    """Weight-recovery construction.

    Components named by ``spec.without_audio_weights`` are iid uniform;
    ground truth is exactly their planted weighted sum (a convex combination,
    so it is a valid memorability score).  Gestalt scores are all zero:
    routing is irrelevant, only the weights matter.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_videos
    names = list(spec.without_audio_weights)
    draws = {name: rng.uniform(0.0, 1.0, size=n) for name in names}
    gt = np.zeros(n)
    for name in names:
        gt = gt + spec.without_audio_weights[name] * draws[name]

    ids = _ids(n)
    records = [
        VideoRecord(id=vid, split="train", mem_score=float(score))
        for vid, score in zip(ids, gt)
    ]
    table = PredictionTable(tuple(names))
    for i, vid in enumerate(ids):
        table.add_row(vid, {name: float(draws[name][i]) for name in names})
    return SynthDataset(
        records=records, table=table, gestalt_scores={vid: 0.0 for vid in ids}
    )


def write_dataset(dataset: SynthDataset, out_dir: str | Path) -> dict[str, str]:
    """Write manifest.jsonl / predictions.csv / gestalt.csv into a directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "manifest": out_dir / "manifest.jsonl",
        "predictions": out_dir / "predictions.csv",
        "gestalt": out_dir / "gestalt.csv",
    }
    write_manifest(dataset.records, paths["manifest"])
    write_predictions(dataset.table, paths["predictions"])
    write_score_csv(dataset.gestalt_scores, paths["gestalt"])
    return {k: str(v) for k, v in paths.items()}


__all__ = [
    "PREDICTION_CLIP",
    "DEFAULT_NOISE",
    "DEFAULT_AUG_CAPTION_NOISE_BELOW",
    "DEFAULT_AUG_CAPTION_NOISE_ABOVE",
    "SynthSpec",
    "SynthDataset",
    "generate",
    "generate_weight_plant",
    "write_dataset",
]
