"""Command-line surface for the fusion engine.

Exit codes: 0 success, 1 validation/data error, 2 usage error.  Results go
to stdout or ``--out``; diagnostics go to stderr only.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dsp, fusion, gestalt, optimizer, synthgen
from .datamodel import (
    FusionConfig,
    format_real,
    load_manifest,
    load_predictions,
    load_tags,
    resolve_path,
)
from .errors import SchemaError

log = logging.getLogger("memfuse")


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_json(args, payload) -> None:
    _emit(args, json.dumps(payload, indent=2))


def load_config(args) -> FusionConfig:
    """``--config paper`` or a JSON file, with component-level overrides."""
    if args.config == "paper":
        cfg = FusionConfig.paper()
    else:
        path = Path(args.config)
        if not path.is_file():
            raise SchemaError(f"fusion config not found: {path}")
        cfg = FusionConfig.from_json(path.read_text(encoding="utf-8"))
    overrides = {}
    if getattr(args, "audio_component", None):
        overrides["audio_component"] = args.audio_component
    if getattr(args, "plain_captions", False):
        overrides["plain_captions"] = True
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def parse_thresholds(text: str) -> list[float]:
    """Either ``start:stop:step`` (inclusive, step must divide the span)
    or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad range {text!r}")
        count = round((stop - start) / step)
        if abs(start + count * step - stop) > 1e-9:
            raise ValueError(f"step does not divide the span in {text!r}")
        return [start + i * step for i in range(count + 1)]
    values = [float(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ValueError("no thresholds given")
    return values


def _gated_inputs(args):
    records = load_manifest(args.manifest)
    table = load_predictions(args.predictions)
    scores = gestalt.load_score_csv(args.gestalt)
    ids = [r.id for r in records if r.id in table and r.id in scores.keys()]
    if not ids:
        raise SchemaError(
            "no videos appear in the manifest, predictions and gestalt file at once"
        )
    return records, table, scores, ids


# ---------------------------------------------------------------------------
# subcommands

def cmd_mfcc(args) -> int:
    params = dsp.DspParams(
        sample_rate=1,  # placeholder; replaced per file below
        n_fft=args.n_fft,
        hop_length=args.hop_length,
        n_mels=args.n_mels,
        n_mfcc=args.n_mfcc,
        delta_width=args.delta_width,
    )

    def one(wav_path: Path, out_path: Path) -> dict:
        samples, rate = dsp.load_wav(wav_path)
        p = dataclasses.replace(params, sample_rate=rate)
        tensor = dsp.extract_tensor(samples, p)
        dsp.write_tensor(tensor, out_path)
        return {
            "input": str(wav_path),
            "output": str(out_path),
            "shape": list(tensor.shape),
            "sample_rate": rate,
        }

    if args.wav:
        if not args.out:
            raise SchemaError("--out is required with --wav")
        report = one(Path(args.wav), Path(args.out))
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
        return 0

    if not args.manifest or not args.out_dir:
        raise SchemaError("mfcc needs either --wav/--out or --manifest/--out-dir")
    records = load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    skipped = []
    for rec in records:
        if rec.audio_path is None:
            skipped.append({"id": rec.id, "reason": "no audio_path"})
            continue
        jobs.append((rec.id, resolve_path(args.manifest, rec.audio_path)))

    def batch_one(item):
        vid, wav_path = item
        try:
            return vid, one(wav_path, out_dir / f"{vid}.mft"), None
        except (SchemaError, OSError) as exc:
            return vid, None, str(exc)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(batch_one, jobs))
    else:
        results = [batch_one(item) for item in jobs]
    written, errors = [], []
    for vid, report, error in results:  # manifest order regardless of pool timing
        if error is None:
            written.append(report)
        else:
            errors.append({"id": vid, "error": error})
    payload = {"written": written, "errors": errors, "skipped": skipped}
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return 0 if not errors else 1


def _load_hcu_arousal(path: str | Path) -> dict[str, tuple[float, float]]:
    out: dict[str, tuple[float, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["video_id", "hcu", "arousal"]:
            raise SchemaError(f"{path}: header must be video_id,hcu,arousal")
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise SchemaError(f"{path}: row {rowno}: expected 3 cells")
            try:
                out[row[0]] = (float(row[1]), float(row[2]))
            except ValueError:
                raise SchemaError(f"{path}: row {rowno}: non-numeric cell") from None
    return out


def cmd_gestalt(args) -> int:
    if args.features:
        raw = gestalt.load_feature_csv(args.features)
    else:
        if not args.manifest or not args.hcu_arousal:
            raise SchemaError(
                "gestalt needs --features, or --manifest plus --hcu-arousal for the tag path"
            )
        records = load_manifest(args.manifest)
        ha = _load_hcu_arousal(args.hcu_arousal)
        music_labels = (
            frozenset(args.music_labels.split(","))
            if args.music_labels
            else gestalt.DEFAULT_MUSIC_LABELS
        )
        raw = {}
        for rec in records:
            if rec.tag_path is None:
                log.warning("video %s has no tag_path; skipped", rec.id)
                continue
            if rec.id not in ha:
                raise SchemaError(f"video {rec.id!r} missing from {args.hcu_arousal}")
            tags = load_tags(resolve_path(args.manifest, rec.tag_path))
            raw[rec.id] = gestalt.features_from_tags(
                tags,
                hcu=ha[rec.id][0],
                arousal=ha[rec.id][1],
                music_labels=music_labels,
                absolute_music_rule=args.absolute_music,
            )
    if not raw:
        raise SchemaError("no videos with gestalt features")

    if args.manifest:
        records = load_manifest(args.manifest)
        split_ids = {r.id for r in records if r.split == args.norm_split}
        basis = {vid: f for vid, f in raw.items() if vid in split_ids}
        if not basis:
            raise SchemaError(
                f"no {args.norm_split}-split videos available for normalization"
            )
    else:
        log.warning("no manifest given; normalizing over all videos")
        basis = raw
    stats = gestalt.compute_normalization_stats(basis, args.norm_split)
    normalized = gestalt.normalize_features(raw, stats)
    weights = gestalt.GestaltWeights.paper()
    if args.weights:
        parts = [float(p) for p in args.weights.split(",")]
        if len(parts) != 4:
            raise SchemaError("--weights needs 4 comma-separated values")
        weights = gestalt.GestaltWeights(*parts)
    scores = gestalt.score_all(normalized, weights)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("video_id", "gestalt"))
    for vid, score in scores.items():
        writer.writerow([vid, format_real(score)])
    _emit(args, buf.getvalue())
    if args.report:
        gestalt.write_report(
            gestalt.full_report(normalized, scores, n_bins=args.bins), args.report
        )
    if args.normalized_features:
        gestalt.write_feature_csv(normalized, args.normalized_features)
    return 0


def cmd_fuse(args) -> int:
    cfg = load_config(args)
    records, table, scores, ids = _gated_inputs(args)
    preds = fusion.predict_all(ids, scores, table, cfg)
    if args.format == "json":
        payload = [dataclasses.asdict(p) for p in preds]
        _emit_json(args, payload)
    else:
        _emit(args, fusion.fused_csv_text(preds))
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args)
    records, table, scores, ids = _gated_inputs(args)
    preds = fusion.predict_all(ids, scores, table, cfg)
    result = fusion.evaluate(records, preds)
    payload = {
        "spearman": result.rho,
        "n_used": result.n_used,
        "n_skipped": result.n_skipped,
        "n_with_audio": sum(p.pathway == fusion.WITH_AUDIO for p in preds),
        "n_without_audio": sum(p.pathway == fusion.WITHOUT_AUDIO for p in preds),
    }
    _emit_json(args, payload)
    return 0


def _train_ground_truth(records) -> dict[str, float]:
    gt = {r.id: r.mem_score for r in records if r.split == "train" and r.mem_score is not None}
    if not gt:
        raise SchemaError("no train-split videos with a mem_score")
    return gt


def cmd_optimize(args) -> int:
    base = load_config(args)
    records, table, scores, _ = _gated_inputs(args)
    gt = _train_ground_truth(records)
    space = optimizer.SearchSpace(
        without_audio_components=tuple(args.without_components.split(",")),
        with_audio_components=tuple(args.with_components.split(",")),
        weight_step=args.weight_step,
        threshold_step=args.threshold_step,
        n_iterations=args.iterations,
        n_folds=args.folds,
        seed=args.seed,
    )
    result = optimizer.rscv(table, scores, gt, space, base=base)
    _emit(args, result.to_json())
    return 0


def cmd_optimize_gestalt(args) -> int:
    cfg = load_config(args)
    records = load_manifest(args.manifest)
    table = load_predictions(args.predictions)
    raw_mode = args.normalize
    features = gestalt.load_feature_csv(args.features, normalized=not raw_mode)
    if raw_mode:
        split_ids = {r.id for r in records if r.split == "train"}
        basis = {vid: f for vid, f in features.items() if vid in split_ids}
        if not basis:
            raise SchemaError("no train-split videos available for normalization")
        stats = gestalt.compute_normalization_stats(basis, "train")
        features = gestalt.normalize_features(features, stats)
    gt = _train_ground_truth(records)
    space = optimizer.SearchSpace(
        weight_step=args.weight_step,
        threshold_step=0.01,
        n_iterations=args.iterations,
        n_folds=args.folds,
        seed=args.seed,
    )
    result = optimizer.rscv_gestalt_weights(table, features, gt, cfg, space)
    _emit(args, result.to_json())
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    records, table, scores, ids = _gated_inputs(args)
    gt = {r.id: r.mem_score for r in records if r.mem_score is not None}
    try:
        thresholds = parse_thresholds(args.thresholds)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    pairs = optimizer.threshold_sweep(table, scores, gt, cfg, thresholds)
    if args.format == "json":
        payload = [{"threshold": t, "spearman": rho} for t, rho in pairs]
        _emit_json(args, payload)
    else:
        lines = ["threshold,spearman"]
        lines += [f"{format_real(t)},{format_real(rho)}" for t, rho in pairs]
        _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_synth(args) -> int:
    noise = dict(synthgen.DEFAULT_NOISE)
    if args.noise_frame is not None:
        noise["frame"] = args.noise_frame
    if args.noise_caption is not None:
        noise["caption"] = args.noise_caption
    if args.noise_audio is not None:
        noise["spectrogram"] = args.noise_audio
        noise["bayesian_ridge"] = args.noise_audio
    spec = synthgen.SynthSpec(
        n_videos=args.n,
        seed=args.seed,
        gestalt_split=args.split,
        noise=noise,
    )
    dataset = (
        synthgen.generate_weight_plant(spec) if args.plant else synthgen.generate(spec)
    )
    paths = synthgen.write_dataset(dataset, args.out_dir)
    sys.stdout.write(json.dumps(paths, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument(
        "--jobs", type=int, default=1, help="worker threads for per-video batches"
    )
    common.add_argument("--out", help="write the primary result here instead of stdout")
    common.add_argument(
        "--format", choices=("json", "csv"), default=None, help="output format"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    cfg_common = argparse.ArgumentParser(add_help=False)
    cfg_common.add_argument(
        "--config",
        default="paper",
        help="'paper' for the published operating point, or a JSON config path",
    )
    cfg_common.add_argument(
        "--audio-component",
        choices=("spectrogram", "bayesian_ridge"),
        default=None,
        help="which audio model column fills the 'audio' slot",
    )
    cfg_common.add_argument(
        "--plain-captions",
        action="store_true",
        help="fuse un-augmented captions on the with-audio pathway",
    )

    parser = argparse.ArgumentParser(
        prog="memfuse",
        description="Gestalt-gated late fusion for video memorability scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mfcc", parents=[common], help="wav -> MFCC/delta tensor file")
    p.add_argument("--wav", help="single input wav")
    p.add_argument("--manifest", help="batch mode: process every audio_path")
    p.add_argument("--out-dir", help="batch mode: tensor output directory")
    p.add_argument("--n-fft", type=int, default=2048)
    p.add_argument("--hop-length", type=int, default=256)
    p.add_argument("--n-mels", type=int, default=128)
    p.add_argument("--n-mfcc", type=int, default=20)
    p.add_argument("--delta-width", type=int, default=9)
    p.set_defaults(func=cmd_mfcc)

    p = sub.add_parser(
        "gestalt", parents=[common], help="features or tags -> gestalt score CSV"
    )
    p.add_argument("--features", help="raw feature CSV")
    p.add_argument("--manifest", help="manifest (for tag paths and split info)")
    p.add_argument("--hcu-arousal", help="CSV video_id,hcu,arousal for tag mode")
    p.add_argument("--music-labels", help="comma-separated music tag labels")
    p.add_argument(
        "--absolute-music",
        action="store_true",
        help="music cutoff at absolute confidence 0.75 instead of 75%% of the top tag",
    )
    p.add_argument("--weights", help="4 comma-separated gestalt weights")
    p.add_argument(
        "--norm-split", default="train", help="split whose min/max normalize (default train)"
    )
    p.add_argument("--report", help="write a distribution report JSON here")
    p.add_argument("--normalized-features", help="also write normalized features here")
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_gestalt)

    def gated(name: str, help_text: str):
        q = sub.add_parser(name, parents=[common, cfg_common], help=help_text)
        q.add_argument("--manifest", required=True)
        q.add_argument("--predictions", required=True)
        q.add_argument("--gestalt", required=True, help="gestalt score CSV")
        return q

    p = gated("fuse", "write gated fused scores per video")
    p.set_defaults(func=cmd_fuse)

    p = gated("evaluate", "Spearman of gated fusion against the manifest's scores")
    p.set_defaults(func=cmd_evaluate)

    p = gated("optimize", "randomized search over pathway weights + threshold")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--weight-step", type=float, default=0.01)
    p.add_argument("--threshold-step", type=float, default=0.01)
    p.add_argument("--without-components", default="frame,caption")
    p.add_argument("--with-components", default="frame,aug_caption,audio")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser(
        "optimize-gestalt",
        parents=[common, cfg_common],
        help="randomized search over the 4 gestalt feature weights",
    )
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--features", required=True, help="gestalt feature CSV")
    p.add_argument(
        "--normalize",
        action="store_true",
        help="treat --features as raw and min-max normalize from the train split",
    )
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--weight-step", type=float, default=0.05)
    p.set_defaults(func=cmd_optimize_gestalt)

    p = gated("sweep", "Spearman at each gestalt threshold")
    p.add_argument(
        "--thresholds",
        required=True,
        help="start:stop:step (inclusive) or comma-separated values",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True, help="number of videos (>= 20)")
    p.add_argument("--split", type=float, default=0.8, help="gestalt split point")
    p.add_argument(
        "--plant",
        action="store_true",
        help="weight-recovery construction instead of the gestalt-split one",
    )
    p.add_argument("--noise-frame", type=float, default=None)
    p.add_argument("--noise-caption", type=float, default=None)
    p.add_argument("--noise-audio", type=float, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.format is None:
        args.format = "csv" if args.command in ("fuse", "sweep") else "json"
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
