"""Minimal PCM WAV decoding for the export jobs.

Only 16-bit integer PCM is accepted (mono or stereo; stereo is downmixed by
channel average).  Everything else raises :class:`ExportError` so the job
runner can log a per-video failure and move on.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ExportError


def decode(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a WAV file; return (mono float64 samples in [-1, 1], sample rate)."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise ExportError(f"audio file not found: {path}") from None
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise ExportError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid, size = blob[pos : pos + 4], struct.unpack_from("<I", blob, pos + 4)[0]
        body = blob[pos + 8 : pos + 8 + size]
        if cid == b"fmt " and fmt is None:
            if len(body) < 16:
                raise ExportError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data" and data is None:
            if len(body) < size:
                raise ExportError(f"{path}: data chunk truncated")
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise ExportError(f"{path}: missing fmt or data chunk")
    codec, channels, rate, _, _, bits = fmt
    if codec != 1:
        raise ExportError(f"{path}: unsupported codec (format tag {codec}), want PCM")
    if bits != 16:
        raise ExportError(f"{path}: unsupported sample width ({bits} bit), want 16")
    if channels not in (1, 2):
        raise ExportError(f"{path}: unsupported channel count ({channels})")
    if rate <= 0:
        raise ExportError(f"{path}: bad sample rate ({rate})")

    frames = len(data) // (2 * channels)
    if frames == 0:
        raise ExportError(f"{path}: no audio frames")
    raw = np.frombuffer(data[: frames * 2 * channels], dtype="<i2")
    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    samples = np.asarray(raw, dtype=np.float64) / 32768.0
    return samples, int(rate)
