"""Spectrogram feature extraction: log-mel, MFCC, deltas, 3-channel tensors.

Fixed conventions (the reference oracle in the test suite mirrors these):

* framing starts at sample 0, no center padding;
  ``n_frames = 1 + (n_samples - n_fft) // hop_length``
* periodic Hann window ``0.5 - 0.5*cos(2*pi*n/n_fft)``
* magnitude-squared (power) spectrum
* HTK mel scale ``mel = 2595 * log10(1 + f/700)``; triangular filters with
  peak 1 (no area normalization) spanning 0 Hz to Nyquist
* ``log(mel_energy + log_floor)`` with an additive floor, so silence maps to
  ``log(log_floor)`` instead of -inf
* MFCC: orthonormal DCT-II along the band axis
* delta: least-squares local slope over a centered window, edge-replicated
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError


@dataclass(frozen=True)
class DspParams:
    sample_rate: int
    n_fft: int = 2048
    hop_length: int = 256
    n_mels: int = 128
    n_mfcc: int = 20
    delta_width: int = 9
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.n_fft <= 0 or self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 0 < self.hop_length <= self.n_fft:
            raise ValueError(f"hop_length must be in (0, n_fft], got {self.hop_length}")
        if not 0 < self.n_mfcc <= self.n_mels:
            raise ValueError(f"n_mfcc must be in (0, n_mels], got {self.n_mfcc}")
        if self.delta_width < 3 or self.delta_width % 2 == 0:
            raise ValueError(f"delta_width must be odd and >= 3, got {self.delta_width}")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")


# ---------------------------------------------------------------------------
# WAV loading

def load_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Decode a 16-bit PCM RIFF/WAVE file.

    Returns samples in [-1, 1] (int16 / 32768) and the sample rate; stereo
    is downmixed by per-sample channel mean.
    """
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"wav file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise SchemaError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt " and fmt is None:
            if chunk_size < 16 or body_start + 16 > len(raw):
                raise SchemaError(f"{path}: malformed fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", raw, body_start)
        elif chunk_id == b"data" and data is None:
            body = raw[body_start : body_start + chunk_size]
            if len(body) < chunk_size:
                raise SchemaError(f"{path}: truncated data chunk")
            data = body
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise SchemaError(f"{path}: missing fmt chunk")
    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise SchemaError(
            f"{path}: unsupported encoding (format code {audio_format}), expected 16-bit PCM"
        )
    if bits != 16:
        raise SchemaError(f"{path}: unsupported bit depth {bits}, expected 16")
    if n_channels < 1:
        raise SchemaError(f"{path}: invalid channel count {n_channels}")
    if data is None:
        raise SchemaError(f"{path}: missing data chunk")

    frame_bytes = 2 * n_channels
    n_frames = len(data) // frame_bytes
    if n_frames == 0:
        raise SchemaError(f"{path}: zero-length audio")
    ints = np.frombuffer(data[: n_frames * frame_bytes], dtype="<i2")
    samples = ints.astype(np.float64).reshape(n_frames, n_channels).mean(axis=1) / 32768.0
    return samples, sample_rate


def write_wav(samples: np.ndarray, sample_rate: int, path: str | Path) -> None:
    """Write mono 16-bit PCM (values clipped to [-1, 1])."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ints = np.round(clipped * 32767.0).astype("<i2")
    data = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, 1, 1, sample_rate, sample_rate * 2, 2, 16,
        b"data", len(data),
    )
    Path(path).write_bytes(header + data)


# ---------------------------------------------------------------------------
# mel / MFCC / delta

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(params: DspParams) -> np.ndarray:
    """(n_mels, n_fft//2 + 1) triangular filters, peak 1 at each center."""
    n_bins = params.n_fft // 2 + 1
    mel_points = np.linspace(0.0, float(hz_to_mel(params.sample_rate / 2.0)), params.n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(n_bins) * (params.sample_rate / params.n_fft)

    lower = hz_points[:-2, None]
    center = hz_points[1:-1, None]
    upper = hz_points[2:, None]
    rising = (bin_freqs[None, :] - lower) / (center - lower)
    falling = (upper - bin_freqs[None, :]) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def mel_center_frequencies(params: DspParams) -> np.ndarray:
    """Center frequency (Hz) of each mel band."""
    mel_points = np.linspace(0.0, float(hz_to_mel(params.sample_rate / 2.0)), params.n_mels + 2)
    return mel_to_hz(mel_points[1:-1])


def frame_signal(samples: np.ndarray, params: DspParams) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("expected mono samples")
    if samples.size < params.n_fft:
        raise ValueError(
            f"audio shorter than one frame ({samples.size} < n_fft {params.n_fft})"
        )
    n_frames = 1 + (samples.size - params.n_fft) // params.hop_length
    idx = np.arange(params.n_fft)[None, :] + params.hop_length * np.arange(n_frames)[:, None]
    return samples[idx]


def mel_spectrogram(samples: np.ndarray, params: DspParams) -> np.ndarray:
    """Log mel power spectrogram, shape (n_mels, n_frames)."""
    frames = frame_signal(samples, params)
    n = np.arange(params.n_fft)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / params.n_fft)
    spectrum = np.fft.rfft(frames * window, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    mel_energy = mel_filterbank(params) @ power.T
    return np.log(mel_energy + params.log_floor)


def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * m + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    mat[0, :] = math.sqrt(1.0 / n)
    return mat


def mfcc(mel: np.ndarray, n_mfcc: int) -> np.ndarray:
    """Orthonormal DCT-II along the band axis, first ``n_mfcc`` coefficients."""
    mel = np.asarray(mel, dtype=np.float64)
    if n_mfcc > mel.shape[0]:
        raise ValueError(f"n_mfcc {n_mfcc} exceeds band count {mel.shape[0]}")
    return _dct_matrix(mel.shape[0])[:n_mfcc] @ mel


def delta(m: np.ndarray, width: int) -> np.ndarray:
    """Least-squares local slope along time over a ``width``-frame window.

    Edge frames see edge-replicated padding; output shape equals input shape.
    """
    if width < 3 or width % 2 == 0:
        raise ValueError(f"delta width must be odd and >= 3, got {width}")
    m = np.asarray(m, dtype=np.float64)
    half = width // 2
    padded = np.pad(m, ((0, 0), (half, half)), mode="edge")
    denom = 2.0 * sum(k * k for k in range(1, half + 1))
    out = np.zeros_like(m)
    for k in range(1, half + 1):
        out += k * (padded[:, half + k : padded.shape[1] - half + k]
                    - padded[:, half - k : padded.shape[1] - half - k])
    return out / denom


def stack3(mfcc_matrix: np.ndarray, params: DspParams) -> np.ndarray:
    """3-channel float32 tensor: (mfcc, delta, delta-of-delta)."""
    base = np.asarray(mfcc_matrix, dtype=np.float32)
    d1 = delta(base.astype(np.float64), params.delta_width)
    d2 = delta(d1, params.delta_width)
    return np.stack([base, d1.astype(np.float32), d2.astype(np.float32)])


def extract_tensor(samples: np.ndarray, params: DspParams) -> np.ndarray:
    """Full chain: samples -> log-mel -> MFCC -> 3-channel tensor."""
    return stack3(mfcc(mel_spectrogram(samples, params), params.n_mfcc), params)


# ---------------------------------------------------------------------------
# tensor file format

_MAGIC = b"MFT1"


def write_tensor(tensor: np.ndarray, path: str | Path) -> None:
    """Binary layout: magic ``MFT1`` + 3 little-endian u32 dims + row-major
    little-endian float32 payload, channel-contiguous."""
    tensor = np.asarray(tensor, dtype=np.float32)
    if tensor.ndim != 3 or tensor.shape[0] != 3:
        raise ValueError(f"expected a (3, rows, cols) tensor, got shape {tensor.shape}")
    header = _MAGIC + struct.pack("<III", *tensor.shape)
    Path(path).write_bytes(header + tensor.astype("<f4").tobytes(order="C"))


def read_tensor(path: str | Path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 16:
        raise SchemaError(f"{path}: tensor file too short for header")
    if raw[:4] != _MAGIC:
        raise SchemaError(f"{path}: bad magic {raw[:4]!r}, expected {_MAGIC!r}")
    channels, rows, cols = struct.unpack_from("<III", raw, 4)
    expected = 16 + 4 * channels * rows * cols
    if len(raw) != expected:
        raise SchemaError(f"{path}: payload size {len(raw) - 16} does not match header dims")
    return np.frombuffer(raw, dtype="<f4", offset=16).reshape(channels, rows, cols).copy()


__all__ = [
    "DspParams",
    "load_wav",
    "write_wav",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "mel_center_frequencies",
    "frame_signal",
    "mel_spectrogram",
    "mfcc",
    "delta",
    "stack3",
    "extract_tensor",
    "write_tensor",
    "read_tensor",
]
