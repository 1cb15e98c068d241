"""Command line front end.

    memexport tags        --manifest M --out-dir DIR [--model N] [--top-n K]
    memexport embeddings  --manifest M --out CSV [--model N]
    memexport predictions --manifest M --component C --out CSV [--model N]
                          [--frames-dir D] [--captions-dir D] [--tags-dir D]
    memexport features    --manifest M --tags-dir D --out CSV [--model N]
    memexport models

The job report JSON goes to stdout (and to ``--report PATH`` when given).
Exit codes: 0 all videos handled, 1 when any video errored or the job could
not run, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import models
from .errors import ExportError
from .jobs import (
    ExportJob,
    export_embeddings,
    export_features,
    export_predictions,
    export_tags,
    write_report,
)


def _finish(report: dict, args) -> int:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    if args.report:
        write_report(report, args.report)
    return 1 if report["errors"] else 0


def _job(args, output) -> ExportJob:
    return ExportJob(
        manifest=args.manifest, model=args.model, output=output, device=args.device
    )


def cmd_tags(args) -> int:
    return _finish(export_tags(_job(args, args.out_dir), top_n=args.top_n), args)


def cmd_embeddings(args) -> int:
    return _finish(export_embeddings(_job(args, args.out)), args)


def cmd_predictions(args) -> int:
    report = export_predictions(
        _job(args, args.out),
        args.component,
        frames_dir=args.frames_dir,
        captions_dir=args.captions_dir,
        tags_dir=args.tags_dir,
    )
    return _finish(report, args)


def cmd_features(args) -> int:
    return _finish(export_features(_job(args, args.out), tags_dir=args.tags_dir), args)


def cmd_models(args) -> int:
    sys.stdout.write(json.dumps(models.available_models(), indent=2) + "\n")
    return 0


_DEFAULT_PREDICTION_MODELS = {
    "frame": models.DEFAULT_MODELS["frame"],
    "caption": models.DEFAULT_MODELS["caption"],
    "aug_caption": models.DEFAULT_MODELS["caption"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memexport",
        description="run batch inference and dump engine-ready feature files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", required=True, help="JSONL video manifest")
    common.add_argument("--device", default="cpu", help="device hint recorded in the report")
    common.add_argument("--report", help="also write the job report JSON here")

    p = sub.add_parser("tags", parents=[common], help="audio -> per-video tag JSON")
    p.add_argument("--out-dir", required=True, help="directory for <video_id>.json files")
    p.add_argument("--model", default=models.DEFAULT_MODELS["tagger"])
    p.add_argument("--top-n", type=int, default=5)
    p.set_defaults(func=cmd_tags)

    p = sub.add_parser("embeddings", parents=[common], help="audio -> embedding CSV")
    p.add_argument("--out", required=True, help="embedding CSV path")
    p.add_argument("--model", default=models.DEFAULT_MODELS["embedder"])
    p.set_defaults(func=cmd_embeddings)

    p = sub.add_parser(
        "predictions", parents=[common], help="score one component into a predictions CSV"
    )
    p.add_argument("--component", required=True, choices=sorted(_DEFAULT_PREDICTION_MODELS))
    p.add_argument("--out", required=True, help="predictions CSV (merged into if present)")
    p.add_argument("--model", help="model name (defaults per component)")
    p.add_argument("--frames-dir", help="PGM frames under <frames-dir>/<video_id>/")
    p.add_argument("--captions-dir", help="caption text files <captions-dir>/<video_id>.txt")
    p.add_argument("--tags-dir", help="tag JSON files for caption augmentation")
    p.set_defaults(func=cmd_predictions)

    p = sub.add_parser(
        "features", parents=[common], help="tag files -> video_id,hcu,arousal CSV"
    )
    p.add_argument("--tags-dir", required=True, help="directory of <video_id>.json tag files")
    p.add_argument("--out", required=True, help="feature CSV path")
    p.add_argument("--model", default=models.DEFAULT_MODELS["features"])
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("models", help="list the registered model names")
    p.set_defaults(func=cmd_models)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "predictions" and args.model is None:
        args.model = _DEFAULT_PREDICTION_MODELS[args.component]
    try:
        return args.func(args)
    except (ExportError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
