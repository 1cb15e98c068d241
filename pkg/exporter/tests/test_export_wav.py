import struct

import numpy as np
import pytest

from memexport.errors import ExportError
from memexport.wav import decode

from export_corpus import write_wav


def test_mono_round_trip(tmp_path):
    rate = 8000
    sig = 0.5 * np.sin(2 * np.pi * 440 * np.arange(rate) / rate)
    path = tmp_path / "tone.wav"
    write_wav(path, sig, rate)
    samples, got_rate = decode(path)
    assert got_rate == rate
    assert samples.shape == (rate,)
    assert samples.dtype == np.float64
    # 16-bit quantization error is at most one step
    assert np.max(np.abs(samples - sig)) < 1.0 / 32767


def test_stereo_downmix_is_channel_mean(tmp_path):
    # L = +0.5, R = -0.5 constant -> mean exactly 0
    frames = 100
    left = np.full(frames, 16384, dtype="<i2")
    right = np.full(frames, -16384, dtype="<i2")
    pcm = np.empty(frames * 2, dtype="<i2")
    pcm[0::2], pcm[1::2] = left, right
    body = pcm.tobytes()
    blob = (
        b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
        + b"fmt " + struct.pack("<IHHIIHH", 16, 1, 2, 8000, 32000, 4, 16)
        + b"data" + struct.pack("<I", len(body)) + body
    )
    path = tmp_path / "st.wav"
    path.write_bytes(blob)
    samples, rate = decode(path)
    assert rate == 8000
    assert samples.shape == (frames,)
    assert np.all(samples == 0.0)


def test_skips_unknown_chunks_with_odd_padding(tmp_path):
    pcm = np.zeros(10, dtype="<i2")
    pcm[0] = 1000
    body = pcm.tobytes()
    junk = b"LIST" + struct.pack("<I", 3) + b"abc" + b"\x00"  # odd size, padded
    blob = (
        b"RIFF" + struct.pack("<I", 100) + b"WAVE"
        + b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 16000, 32000, 2, 16)
        + junk
        + b"data" + struct.pack("<I", len(body)) + body
    )
    path = tmp_path / "chunky.wav"
    path.write_bytes(blob)
    samples, rate = decode(path)
    assert samples.shape == (10,)
    assert samples[0] == 1000 / 32768.0


def _wav_blob(codec=1, channels=1, bits=16, n_frames=4, rate=8000):
    width = bits // 8
    body = bytes(n_frames * channels * width)
    return (
        b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
        + b"fmt "
        + struct.pack("<IHHIIHH", 16, codec, channels, rate, rate * channels * width,
                      channels * width, bits)
        + b"data" + struct.pack("<I", len(body)) + body
    )


@pytest.mark.parametrize(
    "blob, message",
    [
        (b"garbage bytes, definitely not audio", "not a RIFF/WAVE"),
        (_wav_blob(codec=3), "unsupported codec"),
        (_wav_blob(bits=8), "unsupported sample width"),
        (_wav_blob(channels=4), "unsupported channel count"),
        (_wav_blob(n_frames=0), "no audio frames"),
        (b"RIFF\x00\x00\x00\x00WAVE", "missing fmt or data"),
    ],
)
def test_rejects_bad_files(tmp_path, blob, message):
    path = tmp_path / "bad.wav"
    path.write_bytes(blob)
    with pytest.raises(ExportError, match=message):
        decode(path)


def test_missing_file(tmp_path):
    with pytest.raises(ExportError, match="not found"):
        decode(tmp_path / "absent.wav")
