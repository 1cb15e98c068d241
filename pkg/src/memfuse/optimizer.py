"""Randomized search over simplex weight grids plus the threshold sweep.

Weight candidates are uniform random compositions: 1/step integer units
dropped into k parts via a stars-and-bars draw, kept as integers internally
and divided out only when a candidate is scored, so grid membership and the
sum-to-one constraint are exact.  One sequential generator drives fold
shuffling first and candidate sampling second, which gives runs a prefix
property: the first n candidates of an (n+m)-iteration search are the same
as an n-iteration search with the same seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .datamodel import (
    AUDIO_PLACEHOLDER,
    FusionConfig,
    GestaltFeatures,
    PredictionTable,
    format_real,
)
from .errors import SchemaError
from .fusion import predict_all
from .gestalt import FEATURE_NAMES, GestaltWeights
from .metrics import spearman


def _grid_units(step: float) -> int:
    """Number of integer units per whole; errors unless 1/step is integral."""
    if not (math.isfinite(step) and 0.0 < step <= 1.0):
        raise ValueError(f"step {step!r} outside (0, 1]")
    units = round(1.0 / step)
    if abs(units * step - 1.0) > 1e-9:
        raise ValueError(f"step {step!r} does not divide 1 exactly")
    return units


@dataclass(frozen=True)
class SearchSpace:
    without_audio_components: tuple[str, ...] = ("frame", "caption")
    with_audio_components: tuple[str, ...] = ("frame", "aug_caption", AUDIO_PLACEHOLDER)
    weight_step: float = 0.01
    threshold_step: float = 0.01
    n_iterations: int = 500
    n_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.without_audio_components or not self.with_audio_components:
            raise ValueError("each pathway needs at least one component")
        _grid_units(self.weight_step)
        _grid_units(self.threshold_step)
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")


@dataclass(frozen=True)
class SearchResult:
    best_config: FusionConfig
    best_score: float
    fold_scores: tuple[float, ...]
    n_evaluations: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "best_config": json.loads(self.best_config.to_json()),
                "best_score": self.best_score,
                "fold_scores": list(self.fold_scores),
                "n_evaluations": self.n_evaluations,
            },
            indent=2,
        )


@dataclass(frozen=True)
class GestaltSearchResult:
    best_weights: GestaltWeights
    best_score: float
    fold_scores: tuple[float, ...]
    n_evaluations: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "best_weights": dict(zip(FEATURE_NAMES, self.best_weights.as_tuple())),
                "best_score": self.best_score,
                "fold_scores": list(self.fold_scores),
                "n_evaluations": self.n_evaluations,
            },
            indent=2,
        )


def sample_composition(k: int, units: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform composition of ``units`` into ``k`` non-negative parts.

    Stars and bars: choose k-1 bar slots among units+k-1 positions; the gaps
    are the parts.  k=1 consumes no randomness.
    """
    if k < 1:
        raise ValueError("need at least one part")
    if k == 1:
        return (units,)
    bars = np.sort(rng.choice(units + k - 1, size=k - 1, replace=False))
    parts = np.diff(np.concatenate(([-1], bars, [units + k - 1]))) - 1
    return tuple(int(p) for p in parts)


def simplex_grid_sample(k: int, step: float, rng: np.random.Generator) -> tuple[float, ...]:
    """One uniform draw from the step-grid simplex, as real weights."""
    units = _grid_units(step)
    return tuple(p / units for p in sample_composition(k, units, rng))


def make_folds(n: int, n_folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle ``range(n)`` and split into ``n_folds`` contiguous chunks."""
    if n < 2 * n_folds:
        raise ValueError(
            f"{n} videos cannot support {n_folds} folds of at least 2 each"
        )
    perm = rng.permutation(n)
    return np.array_split(perm, n_folds)


def search_folds(n: int, space: SearchSpace) -> list[np.ndarray]:
    """The exact folds an rscv run with this space would use (for re-checks)."""
    return make_folds(n, space.n_folds, np.random.default_rng(space.seed))


def _aligned_arrays(
    table: PredictionTable,
    per_video: Mapping[str, object],
    gt: Mapping[str, float],
    columns_needed: Sequence[str],
) -> tuple[list[str], dict[str, np.ndarray], np.ndarray]:
    """Ids shared by all three inputs (table order), column arrays, gt array."""
    ids = [vid for vid in table.ids if vid in per_video and vid in gt]
    if not ids:
        raise ValueError("no videos shared by table, gestalt data and ground truth")
    cols: dict[str, np.ndarray] = {}
    for column in columns_needed:
        values = []
        for vid in ids:
            cell = table.get(vid, column)
            if cell is None:
                raise SchemaError(f"video {vid!r}: missing {column!r} prediction")
            values.append(cell)
        cols[column] = np.asarray(values, dtype=np.float64)
    y = np.asarray([gt[vid] for vid in ids], dtype=np.float64)
    return ids, cols, y


def _pathway_columns(
    components: Sequence[str], audio_component: str, plain_captions: bool
) -> list[str]:
    # Mirrors fusion.resolve_components, without needing a full config.
    out = []
    for name in components:
        if name == AUDIO_PLACEHOLDER:
            out.append(audio_component)
        elif name == "aug_caption" and plain_captions:
            out.append("caption")
        else:
            out.append(name)
    return out


def _fold_scores(
    y: np.ndarray, fused: np.ndarray, folds: list[np.ndarray]
) -> tuple[float, ...]:
    return tuple(spearman(y[fold], fused[fold]) for fold in folds)


def rscv(
    table: PredictionTable,
    gestalt_scores: Mapping[str, float],
    gt: Mapping[str, float],
    space: SearchSpace,
    base: FusionConfig | None = None,
) -> SearchResult:
    """Joint randomized search over both pathway weight vectors + threshold.

    Each candidate's score is the mean held-out Spearman over the shuffled
    folds; the argmax wins, earliest sampled candidate on ties.  Everything
    (folds, candidates, result) is a pure function of the seed.
    """
    if base is None:
        base = FusionConfig.paper()
    wo_cols = _pathway_columns(
        space.without_audio_components, base.audio_component, base.plain_captions
    )
    wa_cols = _pathway_columns(
        space.with_audio_components, base.audio_component, base.plain_captions
    )
    ids, cols, y = _aligned_arrays(
        table, gestalt_scores, gt, list(dict.fromkeys(wo_cols + wa_cols))
    )
    g = np.asarray([gestalt_scores[vid] for vid in ids], dtype=np.float64)
    X_wo = np.column_stack([cols[c] for c in wo_cols])
    X_wa = np.column_stack([cols[c] for c in wa_cols])

    rng = np.random.default_rng(space.seed)
    folds = make_folds(len(ids), space.n_folds, rng)
    w_units = _grid_units(space.weight_step)
    t_units = _grid_units(space.threshold_step)

    best_score = -math.inf
    best: tuple[tuple[int, ...], tuple[int, ...], int] | None = None
    best_folds: tuple[float, ...] = ()
    for _ in range(space.n_iterations):
        comp_wo = sample_composition(len(wo_cols), w_units, rng)
        comp_wa = sample_composition(len(wa_cols), w_units, rng)
        thr_units = int(rng.integers(0, t_units + 1))
        w_wo = np.asarray(comp_wo, dtype=np.float64) / w_units
        w_wa = np.asarray(comp_wa, dtype=np.float64) / w_units
        threshold = thr_units / t_units
        fused = np.where(g >= threshold, X_wa @ w_wa, X_wo @ w_wo)
        scores = _fold_scores(y, fused, folds)
        mean_score = float(np.mean(scores))
        if mean_score > best_score:
            best_score = mean_score
            best = (comp_wo, comp_wa, thr_units)
            best_folds = scores

    assert best is not None
    comp_wo, comp_wa, thr_units = best
    config = replace(
        base,
        gestalt_threshold=thr_units / t_units,
        without_audio_weights={
            name: u / w_units for name, u in zip(space.without_audio_components, comp_wo)
        },
        with_audio_weights={
            name: u / w_units for name, u in zip(space.with_audio_components, comp_wa)
        },
    )
    return SearchResult(
        best_config=config,
        best_score=best_score,
        fold_scores=best_folds,
        n_evaluations=space.n_iterations,
    )


def cv_score(
    table: PredictionTable,
    gestalt_scores: Mapping[str, float],
    gt: Mapping[str, float],
    cfg: FusionConfig,
    folds: list[np.ndarray],
) -> tuple[float, tuple[float, ...]]:
    """Re-evaluate one config on given folds, same arithmetic as rscv."""
    wo_cols = _pathway_columns(
        list(cfg.without_audio_weights), cfg.audio_component, cfg.plain_captions
    )
    wa_cols = _pathway_columns(
        list(cfg.with_audio_weights), cfg.audio_component, cfg.plain_captions
    )
    ids, cols, y = _aligned_arrays(
        table, gestalt_scores, gt, list(dict.fromkeys(wo_cols + wa_cols))
    )
    g = np.asarray([gestalt_scores[vid] for vid in ids], dtype=np.float64)
    X_wo = np.column_stack([cols[c] for c in wo_cols])
    X_wa = np.column_stack([cols[c] for c in wa_cols])
    w_wo = np.asarray(list(cfg.without_audio_weights.values()), dtype=np.float64)
    w_wa = np.asarray(list(cfg.with_audio_weights.values()), dtype=np.float64)
    fused = np.where(g >= cfg.gestalt_threshold, X_wa @ w_wa, X_wo @ w_wo)
    scores = _fold_scores(y, fused, folds)
    return float(np.mean(scores)), scores


def rscv_gestalt_weights(
    table: PredictionTable,
    features: Mapping[str, GestaltFeatures],
    gt: Mapping[str, float],
    cfg: FusionConfig,
    space: SearchSpace,
) -> GestaltSearchResult:
    """Search the 4-feature gestalt simplex, scoring by gated-fusion Spearman.

    ``features`` maps video id to normalized GestaltFeatures; pathway weights
    and threshold stay fixed at ``cfg`` while candidate gestalt weights
    re-route every video.
    """
    wo_cols = _pathway_columns(
        list(cfg.without_audio_weights), cfg.audio_component, cfg.plain_captions
    )
    wa_cols = _pathway_columns(
        list(cfg.with_audio_weights), cfg.audio_component, cfg.plain_captions
    )
    ids, cols, y = _aligned_arrays(
        table, features, gt, list(dict.fromkeys(wo_cols + wa_cols))
    )
    F = np.empty((len(ids), 4), dtype=np.float64)
    for i, vid in enumerate(ids):
        feat = features[vid]
        if not feat.normalized:
            raise ValueError(f"video {vid!r}: gestalt features must be normalized")
        F[i] = feat.as_tuple()
    X_wo = np.column_stack([cols[c] for c in wo_cols])
    X_wa = np.column_stack([cols[c] for c in wa_cols])
    w_wo = np.asarray(list(cfg.without_audio_weights.values()), dtype=np.float64)
    w_wa = np.asarray(list(cfg.with_audio_weights.values()), dtype=np.float64)
    fused_wo = X_wo @ w_wo
    fused_wa = X_wa @ w_wa

    rng = np.random.default_rng(space.seed)
    folds = make_folds(len(ids), space.n_folds, rng)
    units = _grid_units(space.weight_step)

    best_score = -math.inf
    best_comp: tuple[int, ...] = ()
    best_folds: tuple[float, ...] = ()
    for _ in range(space.n_iterations):
        comp = sample_composition(4, units, rng)
        w = np.asarray(comp, dtype=np.float64) / units
        gest = F @ w
        fused = np.where(gest >= cfg.gestalt_threshold, fused_wa, fused_wo)
        scores = _fold_scores(y, fused, folds)
        mean_score = float(np.mean(scores))
        if mean_score > best_score:
            best_score = mean_score
            best_comp = comp
            best_folds = scores

    w = tuple(u / units for u in best_comp)
    return GestaltSearchResult(
        best_weights=GestaltWeights(*w),
        best_score=best_score,
        fold_scores=best_folds,
        n_evaluations=space.n_iterations,
    )


def threshold_sweep(
    table: PredictionTable,
    gestalt_scores: Mapping[str, float],
    gt: Mapping[str, float],
    cfg: FusionConfig,
    thresholds: Sequence[float],
) -> list[tuple[float, float]]:
    """Spearman of gated predictions at each threshold, all else fixed.

    Thresholds must be sorted; values beyond [0, 1] are allowed so the fully
    open / fully closed gate endpoints can be swept.  Uses the same per-video
    scalar fusion as ``fusion.predict_all``, so endpoint values are exactly
    the always/never-audio baselines.
    """
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise ValueError("no thresholds to sweep")
    if any(not math.isfinite(t) for t in thresholds):
        raise ValueError("thresholds must be finite")
    if sorted(thresholds) != thresholds:
        raise ValueError("thresholds must be sorted ascending")
    ids = [vid for vid in table.ids if vid in gestalt_scores and vid in gt]
    if len(ids) < 2:
        raise ValueError("need at least 2 videos shared by all inputs")
    y = [gt[vid] for vid in ids]
    out = []
    for t in thresholds:
        preds = predict_all(ids, gestalt_scores, table, cfg, threshold=t)
        out.append((t, spearman(y, [p.score for p in preds])))
    return out


def write_sweep_csv(pairs: list[tuple[float, float]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("threshold,spearman\n")
        for t, rho in pairs:
            fh.write(f"{format_real(t)},{format_real(rho)}\n")


def write_sweep_json(pairs: list[tuple[float, float]], path: str | Path) -> None:
    payload = [{"threshold": t, "spearman": rho} for t, rho in pairs]
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


__all__ = [
    "SearchSpace",
    "SearchResult",
    "GestaltSearchResult",
    "sample_composition",
    "simplex_grid_sample",
    "make_folds",
    "search_folds",
    "cv_score",
    "rscv",
    "rscv_gestalt_weights",
    "threshold_sweep",
    "write_sweep_csv",
    "write_sweep_json",
]
