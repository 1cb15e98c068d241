"""Gestalt proxy features, normalization, scoring, reports."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memfuse import gestalt
from memfuse.datamodel import GestaltFeatures, TagSet
from memfuse.errors import SchemaError
from memfuse.gestalt import (
    GestaltWeights,
    compute_normalization_stats,
    distribution_report,
    familiarity,
    features_from_tags,
    full_report,
    gestalt_score,
    imageability,
    load_feature_csv,
    load_score_csv,
    musicality,
    normalize_features,
    score_all,
    write_feature_csv,
    write_score_csv,
)


def tags(*pairs) -> TagSet:
    return TagSet(tuple(pairs))


# ---------------------------------------------------------------------------
# musicality / imageability / familiarity example tables

def test_musicality_top_music_tag():
    assert musicality(tags(("Music", 0.9), ("Speech", 0.4))) == 1.0


def test_musicality_relative_band():
    # cutoff is 75% of the max confidence: 0.75 * 0.9 = 0.675
    assert musicality(tags(("Speech", 0.9), ("Music", 0.7))) == 1.0
    assert musicality(tags(("Speech", 0.9), ("Music", 0.5))) == 0.0


def test_musicality_empty_and_absolute_mode():
    assert musicality(tags()) == 0.0
    # absolute reading: cutoff is plain 0.75
    assert musicality(tags(("Speech", 0.9), ("Music", 0.7)), absolute=True) == 0.0
    assert musicality(tags(("Music", 0.76),), absolute=True) == 1.0


def test_musicality_rescaling_invariance():
    base = (("Speech", 0.8), ("Music", 0.61))
    for factor in (0.5, 0.9, 1.25):
        scaled = tuple((lbl, conf * factor) for lbl, conf in base)
        assert musicality(tags(*scaled)) == musicality(tags(*base))


def test_musicality_custom_labels():
    t = tags(("Singing", 0.95), ("Music", 0.1))
    assert musicality(t) == 0.0
    assert musicality(t, music_labels={"Singing"}) == 1.0


def test_imageability_mapping():
    assert imageability(1.0) == 0.0
    assert imageability(0.0) == 1.0
    with pytest.raises(ValueError):
        imageability(0.5)


def test_familiarity_examples():
    assert familiarity(tags(("Dog", 0.8), ("Bark", 0.6))) == 0.8
    assert familiarity(tags()) == 0.0
    assert familiarity(tags(("Rain", 0.33),)) == 0.33


def test_features_from_tags():
    f = features_from_tags(tags(("Music", 0.9), ("Speech", 0.4)), hcu=2.5, arousal=-1.0)
    assert f.imageability == 0.0 and f.familiarity == 0.9
    assert f.hcu == 2.5 and f.arousal == -1.0 and not f.normalized


# ---------------------------------------------------------------------------
# normalization

def _feat(i, h, a, f, normalized=False):
    return GestaltFeatures(i, h, a, f, normalized=normalized)


def test_normalize_min_max():
    raw = {
        "a": _feat(0.0, 2.0, 2.0, 0.0),
        "b": _feat(0.0, 4.0, 4.0, 0.0),
        "c": _feat(0.0, 6.0, 6.0, 0.0),
    }
    stats = compute_normalization_stats(raw, "train")
    out = normalize_features(raw, stats)
    assert [out[k].hcu for k in "abc"] == [0.0, 0.5, 1.0]
    assert [out[k].arousal for k in "abc"] == [0.0, 0.5, 1.0]
    # constant features (imageability, familiarity here) go to the midpoint
    assert all(out[k].imageability == 0.5 for k in "abc")
    assert all(out[k].normalized for k in "abc")


def test_normalize_clamps_out_of_range():
    train = {"a": _feat(0.0, 1.0, 0.0, 0.0), "b": _feat(1.0, 3.0, 1.0, 1.0)}
    stats = compute_normalization_stats(train, "train")
    other = {"x": _feat(0.5, -5.0, 0.5, 0.5), "y": _feat(0.5, 99.0, 0.5, 0.5)}
    out = normalize_features(other, stats)
    assert out["x"].hcu == 0.0
    assert out["y"].hcu == 1.0


def test_normalize_idempotent_on_own_stats():
    rng = np.random.default_rng(3)
    raw = {
        f"v{i}": _feat(*(float(x) for x in rng.uniform(0, 1, size=4)))
        for i in range(10)
    }
    stats = compute_normalization_stats(raw, "train")
    once = normalize_features(raw, stats)
    stats2 = compute_normalization_stats(once, "train")
    twice = normalize_features(once, stats2)
    for vid in raw:
        for a, b in zip(once[vid].as_tuple(), twice[vid].as_tuple()):
            assert abs(a - b) < 1e-12


# ---------------------------------------------------------------------------
# gestalt score

def test_gestalt_score_paper_arithmetic():
    w = GestaltWeights.paper()
    assert w.as_tuple() == (0.2, 0.2, 0.2, 0.4)

    all_ones = _feat(1.0, 1.0, 1.0, 1.0, normalized=True)
    assert gestalt_score(all_ones, w) == 1.0

    f = _feat(1.0, 0.0, 0.0, 1.0, normalized=True)
    got = gestalt_score(f, w)
    # same-order independent expression is bit-identical; decimal is 0.6
    assert got == 0.2 * 1.0 + 0.2 * 0.0 + 0.2 * 0.0 + 0.4 * 1.0
    assert abs(got - 0.6) < 1e-12

    f = _feat(0.5, 0.5, 0.5, 1.0, normalized=True)
    got = gestalt_score(f, w)
    assert got == 0.2 * 0.5 + 0.2 * 0.5 + 0.2 * 0.5 + 0.4 * 1.0
    assert abs(got - 0.7) < 1e-12


def test_gestalt_score_requires_normalized():
    with pytest.raises(ValueError, match="normalized"):
        gestalt_score(_feat(1.0, 0.0, 0.0, 1.0, normalized=False), GestaltWeights.paper())


def test_gestalt_weights_validation():
    with pytest.raises(ValueError):
        GestaltWeights(0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        GestaltWeights(-0.2, 0.6, 0.2, 0.4)


@given(
    st.tuples(*(st.floats(0, 1) for _ in range(4))),
    st.tuples(*(st.floats(0.01, 1) for _ in range(4))),
)
@settings(max_examples=100, deadline=None)
def test_gestalt_score_bounds_and_monotonicity(fvals, wraw):
    total = sum(wraw)
    w = GestaltWeights(*(x / total for x in wraw))
    f = GestaltFeatures(*fvals, normalized=True)
    s = gestalt_score(f, w)
    assert -1e-12 <= s <= 1.0 + 1e-12
    bumped_vals = tuple(min(1.0, v + 0.05) for v in fvals)
    bumped = GestaltFeatures(*bumped_vals, normalized=True)
    assert gestalt_score(bumped, w) >= s - 1e-12


# ---------------------------------------------------------------------------
# distribution report

def test_report_degenerate_bin():
    rep = distribution_report([0.0] * 10, 10)
    assert rep["counts"][0] == 10 and sum(rep["counts"]) == 10


def test_report_one_per_bin():
    scores = [0.05 + 0.1 * i for i in range(10)]
    rep = distribution_report(scores, 10)
    assert rep["counts"] == [1] * 10


def test_report_counts_sum_to_n():
    rng = np.random.default_rng(0)
    scores = rng.uniform(0, 1, size=137)
    rep = distribution_report(scores, 20)
    assert sum(rep["counts"]) == 137
    assert rep["bin_edges"][0] == 0.0 and rep["bin_edges"][-1] == 1.0
    # 1.0 lands in the last bin, not an overflow bin
    rep = distribution_report([1.0, 0.999], 10)
    assert rep["counts"][-1] == 2


def test_report_errors():
    with pytest.raises(ValueError):
        distribution_report([], 10)
    with pytest.raises(ValueError):
        distribution_report([0.5], 0)


def test_full_report_structure():
    feats = {
        "a": _feat(0.1, 0.2, 0.3, 0.4, normalized=True),
        "b": _feat(0.5, 0.6, 0.7, 0.8, normalized=True),
    }
    scores = score_all(feats, GestaltWeights.paper())
    rep = full_report(feats, scores, n_bins=5)
    assert rep["n_videos"] == 2
    for key in ("gestalt", "imageability", "hcu", "arousal", "familiarity"):
        assert sum(rep[key]["counts"]) == 2


# ---------------------------------------------------------------------------
# file formats

def test_feature_csv_round_trip(tmp_path):
    feats = {
        "a": _feat(1.0, -2.25, 17.5, 0.123456789012345678),
        "b": _feat(0.0, 3.0, -1.0, 1.0),
    }
    path = tmp_path / "f.csv"
    write_feature_csv(feats, path)
    again = load_feature_csv(path)
    assert again == feats
    # normalized=True re-validates the range
    with pytest.raises(SchemaError):
        load_feature_csv(path, normalized=True)


def test_score_csv_round_trip_and_validation(tmp_path):
    path = tmp_path / "g.csv"
    write_score_csv({"a": 0.25, "b": 1.0}, path)
    assert load_score_csv(path) == {"a": 0.25, "b": 1.0}
    path.write_text("video_id,gestalt\na,1.5\n")
    with pytest.raises(SchemaError, match="outside"):
        load_score_csv(path)
    path.write_text("video_id,score\na,0.5\n")
    with pytest.raises(SchemaError, match="header"):
        load_score_csv(path)


def test_write_report(tmp_path):
    rep = distribution_report([0.5, 0.7], 4)
    path = tmp_path / "r.json"
    gestalt.write_report(rep, path)
    assert json.loads(path.read_text())["counts"] == rep["counts"]
