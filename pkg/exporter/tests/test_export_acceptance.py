"""Round-trip gate: everything the exporter writes must load through the
engine's own loaders and CLI with zero schema errors, and the frame score
rule must match an independent computation from the known frame pixels.

One PASS/FAIL line per criterion on stdout, mirroring the engine suite
(run with ``-s`` to see them).
"""
import json
import math
import subprocess
import sys
from time import perf_counter

import numpy as np

from memexport import ExportJob
from memexport.jobs import (
    export_embeddings,
    export_features,
    export_predictions,
    export_tags,
)

from memfuse.datamodel import load_manifest, load_predictions, load_tags
from memfuse.regression import load_embeddings

from export_corpus import FRAME_MAXVAL, FRAME_PLAN, build_corpus


def _memfuse(*argv) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "memfuse.cli", *argv], capture_output=True, text=True
    )


def _export_everything(corpus) -> dict:
    paths = {
        "tags": corpus.tags_dir,
        "embeddings": corpus.root / "embeddings.csv",
        "predictions": corpus.root / "predictions.csv",
        "features": corpus.root / "hcu_arousal.csv",
    }
    reports = [
        export_tags(ExportJob(corpus.manifest, "spectral-v1", paths["tags"])),
        export_embeddings(ExportJob(corpus.manifest, "bandlog-v1", paths["embeddings"])),
        export_predictions(
            ExportJob(corpus.manifest, "luma-v1", paths["predictions"]),
            "frame",
            frames_dir=corpus.frames_dir,
        ),
        export_predictions(
            ExportJob(corpus.manifest, "lexical-v1", paths["predictions"]),
            "caption",
            captions_dir=corpus.captions_dir,
        ),
        export_predictions(
            ExportJob(corpus.manifest, "lexical-v1", paths["predictions"]),
            "aug_caption",
            captions_dir=corpus.captions_dir,
            tags_dir=corpus.tags_dir,
        ),
        export_features(
            ExportJob(corpus.manifest, "tagstat-v1", paths["features"]),
            tags_dir=corpus.tags_dir,
        ),
    ]
    for report in reports:
        assert report["errors"] == [], report
        assert report["written"] == corpus.ids, report
    return paths


def expected_frame_score(vid: str) -> float:
    """The documented rule, recomputed from the planted pixel constants."""
    ordered = sorted(FRAME_PLAN[vid])
    picks = (ordered[0], ordered[len(ordered) // 2], ordered[-1])
    return sum(value / FRAME_MAXVAL for _, value in picks) / 3.0


def test_exporter_round_trip(tmp_path):
    started = perf_counter()
    try:
        corpus = build_corpus(tmp_path)
        paths = _export_everything(corpus)

        # every output file through the engine loaders, zero schema errors
        records = load_manifest(corpus.manifest)
        assert [r.id for r in records] == corpus.ids
        for record in records:
            tag_set = load_tags(tmp_path / record.tag_path)
            assert len(tag_set) >= 1
            assert all(0.0 <= conf <= 1.0 for _, conf in tag_set)

        emb_ids, matrix = load_embeddings(paths["embeddings"])
        assert emb_ids == corpus.ids
        assert matrix.shape == (5, 384)
        assert np.all(np.isfinite(matrix))
        one_second_row = matrix[emb_ids.index("vid02")]
        assert np.all(one_second_row[128:] == 0.0)
        assert np.any(one_second_row[:128] != 0.0)

        table = load_predictions(paths["predictions"])
        assert table.components == ("frame", "caption", "aug_caption")
        for vid in corpus.ids:
            for component in table.components:
                value = table.get(vid, component)
                assert value is not None and math.isfinite(value)

        # frame rule against an independent recomputation from known pixels
        for vid in corpus.ids:
            assert abs(table.get(vid, "frame") - expected_frame_score(vid)) < 1e-12
        assert abs(table.get("vid01", "frame") - 0.5) < 1e-12

        # the engine CLI consumes the files end to end
        gestalt_csv = tmp_path / "gestalt.csv"
        proc = _memfuse(
            "gestalt",
            "--manifest", str(corpus.manifest),
            "--hcu-arousal", str(paths["features"]),
            "--out", str(gestalt_csv),
        )
        assert proc.returncode == 0, proc.stderr
        assert gestalt_csv.read_text().splitlines()[0] == "video_id,gestalt"

        config = tmp_path / "config.json"
        config.write_text(
            json.dumps(
                {
                    "gestalt_weights": [0.2, 0.2, 0.2, 0.4],
                    "gestalt_threshold": 0.8,
                    "without_audio_weights": {"frame": 0.38, "caption": 0.62},
                    "with_audio_weights": {"frame": 0.4, "aug_caption": 0.6},
                    "audio_component": "spectrogram",
                }
            )
        )
        eval_out = tmp_path / "eval.json"
        proc = _memfuse(
            "evaluate",
            "--manifest", str(corpus.manifest),
            "--predictions", str(paths["predictions"]),
            "--gestalt", str(gestalt_csv),
            "--config", str(config),
            "--out", str(eval_out),
        )
        assert proc.returncode == 0, proc.stderr
        result = json.loads(eval_out.read_text())
        assert math.isfinite(result["spearman"])
        assert result["n_used"] == 5 and result["n_skipped"] == 0

        # byte-identical on re-export
        rerun = build_corpus(tmp_path / "again")
        rerun_paths = _export_everything(rerun)
        for key in ("embeddings", "predictions", "features"):
            assert rerun_paths[key].read_bytes() == paths[key].read_bytes()
    except BaseException:
        print("[ACCEPTANCE] FAIL  exporter_round_trip")
        raise
    print(f"[ACCEPTANCE] PASS  exporter_round_trip ({perf_counter() - started:.3f}s)")
