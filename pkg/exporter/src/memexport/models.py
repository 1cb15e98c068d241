"""Built-in inference models and the name -> model registry.

Every model here is a small, fully deterministic signal or text statistic
that exposes the same call surface a heavyweight network adapter would.
Jobs select models by name, so swapping in a real pretrained backend means
registering another class under a new name -- job code never changes.

Registry kinds:

* ``tagger``   -- audio -> ranked (label, confidence) pairs
* ``embedder`` -- audio -> fixed-width embedding vector
* ``frame``    -- frame image file -> score in [0, 1]
* ``caption``  -- caption text (optionally tag-augmented) -> score in [0, 1]
* ``features`` -- tag list -> (hcu, arousal) pair
"""
from __future__ import annotations

import string
from pathlib import Path

import numpy as np

from .errors import ExportError

#: Labels the tagger can emit for clearly tonal/harmonic content.  Kept as a
#: module constant so downstream music checks don't hard-code strings.
MUSIC_LABELS = ("Music", "Musical instrument")


def _clip01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


# ---------------------------------------------------------------------------
# audio tagging


class SpectralTagger:
    """Rank sound labels from broadband spectrum statistics.

    Three measurements drive the ranking: RMS level (silence gate), spectral
    flatness of the averaged power spectrum (tonal content sits near 0, noise
    near 1), and zero-crossing rate (separates hissy noise from voiced,
    low-frequency material).  Confidences are clipped into [0, 1].
    """

    name = "spectral-v1"
    _n_fft = 2048
    _max_seconds = 5.0

    def tag(self, samples: np.ndarray, sample_rate: int, top_n: int = 5):
        head = samples[: int(self._max_seconds * sample_rate)]
        rms = float(np.sqrt(np.mean(np.square(head)))) if head.size else 0.0
        if rms < 1e-4:
            ranked = [("Silence", 0.96), ("Inside, small room", 0.12)]
            return ranked[:top_n]

        flatness = self._flatness(head)
        zcr = float(np.mean(np.signbit(head[:-1]) != np.signbit(head[1:])))
        tonality = _clip01(1.0 - flatness / 0.35)

        if tonality >= 0.5:
            ranked = [
                ("Music", _clip01(0.55 + 0.44 * tonality)),
                ("Musical instrument", _clip01(0.30 + 0.45 * tonality)),
                ("Speech", 0.08),
                ("Noise", _clip01(0.3 * flatness)),
            ]
        elif zcr >= 0.25:
            ranked = [
                ("Noise", _clip01(0.45 + 0.5 * flatness)),
                ("Static", _clip01(0.25 + 0.5 * zcr)),
                ("Wind", 0.15),
                ("Speech", 0.07),
            ]
        else:
            ranked = [
                ("Speech", _clip01(0.5 + 0.8 * (0.25 - zcr))),
                ("Narration, monologue", _clip01(0.3 + 0.6 * (0.25 - zcr))),
                ("Noise", _clip01(0.2 + 0.3 * flatness)),
                ("Music", _clip01(0.25 * tonality)),
            ]
        ranked.sort(key=lambda pair: (-pair[1], pair[0]))
        return ranked[:top_n]

    def _flatness(self, x: np.ndarray) -> float:
        n = self._n_fft
        if x.size < n:
            x = np.pad(x, (0, n - x.size))
        window = np.hanning(n)
        frames = [x[s : s + n] * window for s in range(0, x.size - n + 1, n // 2)]
        power = np.mean([np.abs(np.fft.rfft(f)) ** 2 for f in frames], axis=0)
        power = power + 1e-12
        geo = float(np.exp(np.mean(np.log(power))))
        return _clip01(geo / float(np.mean(power)))


# ---------------------------------------------------------------------------
# audio embeddings


class BandLogEmbedder:
    """Per-second log band-energy embedding.

    The first ``seconds`` whole seconds are embedded independently at
    ``dims_per_second`` dimensions each and concatenated.  A second with no
    samples at all contributes an exact zero block; a partial trailing second
    is zero-padded to full length before embedding.  Each block is log1p of
    the mean spectral power in equal slices of the rfft bins.
    """

    name = "bandlog-v1"
    seconds = 3
    dims_per_second = 128

    @property
    def width(self) -> int:
        return self.seconds * self.dims_per_second

    def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        blocks = []
        for s in range(self.seconds):
            seg = samples[s * sample_rate : (s + 1) * sample_rate]
            if seg.size == 0:
                blocks.append(np.zeros(self.dims_per_second))
                continue
            if seg.size < sample_rate:
                seg = np.pad(seg, (0, sample_rate - seg.size))
            power = np.abs(np.fft.rfft(seg)) ** 2
            bands = np.array_split(power, self.dims_per_second)
            blocks.append(np.log1p(np.array([b.mean() for b in bands])))
        return np.concatenate(blocks)


# ---------------------------------------------------------------------------
# frame scoring


def read_pgm(path: str | Path) -> tuple[np.ndarray, int]:
    """Parse a P5 (binary) or P2 (ASCII) PGM image; return (pixels, maxval)."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise ExportError(f"frame not found: {path}") from None
    magic = blob[:2]
    if magic not in (b"P5", b"P2"):
        raise ExportError(f"{path}: not a PGM image")

    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments running to end of line.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3 and pos < len(blob):
        ch = blob[pos : pos + 1]
        if ch == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(blob) and not blob[pos : pos + 1].isspace():
                pos += 1
            tokens.append(blob[start:pos])
    if len(tokens) < 3:
        raise ExportError(f"{path}: truncated PGM header")
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ExportError(f"{path}: bad PGM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ExportError(f"{path}: bad PGM dimensions")

    if magic == b"P2":
        values = blob[pos:].split()
        if len(values) < width * height:
            raise ExportError(f"{path}: truncated PGM data")
        pixels = np.array([int(v) for v in values[: width * height]])
    else:
        pos += 1  # single whitespace byte after maxval
        depth = 2 if maxval > 255 else 1
        need = width * height * depth
        body = blob[pos : pos + need]
        if len(body) < need:
            raise ExportError(f"{path}: truncated PGM data")
        dtype = ">u2" if depth == 2 else np.uint8
        pixels = np.frombuffer(body, dtype=dtype).astype(np.int64)
    return pixels.reshape(height, width), maxval


class LumaFrameModel:
    """Score one frame as its mean pixel intensity on a [0, 1] scale."""

    name = "luma-v1"

    def score_frame(self, path: str | Path) -> float:
        pixels, maxval = read_pgm(path)
        return float(np.mean(pixels)) / maxval


def pick_three(names: list[str]) -> tuple[str, str, str]:
    """First, middle and last of a sorted frame listing.

    With two frames the middle coincides with the last; with one frame all
    three coincide -- the mean rule below then degrades gracefully.
    """
    if not names:
        raise ExportError("no frames to score")
    ordered = sorted(names)
    return ordered[0], ordered[len(ordered) // 2], ordered[-1]


def mean_of_three(first: float, middle: float, last: float) -> float:
    """The published per-video frame score: plain mean of three frame scores."""
    return (first + middle + last) / 3.0


# ---------------------------------------------------------------------------
# caption scoring


class LexicalCaptionModel:
    """Score caption text by lexical variety saturated by length.

    score = 0.1 + 0.8 * (distinct tokens / tokens) * min(tokens, 24) / 24,
    always in [0, 1]; an empty caption scores 0.  Tokens are lowercased and
    stripped of punctuation.

    Tag augmentation appends one bracketed clause to the caption text:
    ``<caption> [tags: <l1>, <l2>, <l3>]`` with up to three labels in
    descending confidence order, lowercased.  No labels -> text unchanged.
    """

    name = "lexical-v1"
    _strip = string.punctuation

    def score_text(self, text: str) -> float:
        tokens = [t.strip(self._strip) for t in text.lower().split()]
        tokens = [t for t in tokens if t]
        if not tokens:
            return 0.0
        variety = len(set(tokens)) / len(tokens)
        saturation = min(len(tokens), 24) / 24
        return _clip01(0.1 + 0.8 * variety * saturation)

    def augment(self, text: str, labels: list[str], max_labels: int = 3) -> str:
        used = [label.lower() for label in labels[:max_labels]]
        if not used:
            return text
        return f"{text} [tags: {', '.join(used)}]"


# ---------------------------------------------------------------------------
# tag-derived gestalt inputs


class TagStatModel:
    """Hcu/arousal stand-in computed from a video's tag confidences.

    hcu (causal uncertainty) is high when the tagger is unsure of the top
    label: 1 - max confidence.  arousal pools the top three confidences:
    sum of the three largest divided by 3.  Both land in [0, 1].
    """

    name = "tagstat-v1"

    def features(self, tags: list[tuple[str, float]]) -> tuple[float, float]:
        if not tags:
            return 1.0, 0.0
        confs = sorted((float(c) for _, c in tags), reverse=True)
        hcu = _clip01(1.0 - confs[0])
        arousal = _clip01(sum(confs[:3]) / 3.0)
        return hcu, arousal


# ---------------------------------------------------------------------------
# registry

_REGISTRIES: dict[str, dict[str, type]] = {
    "tagger": {SpectralTagger.name: SpectralTagger},
    "embedder": {BandLogEmbedder.name: BandLogEmbedder},
    "frame": {LumaFrameModel.name: LumaFrameModel},
    "caption": {LexicalCaptionModel.name: LexicalCaptionModel},
    "features": {TagStatModel.name: TagStatModel},
}

DEFAULT_MODELS = {kind: next(iter(names)) for kind, names in _REGISTRIES.items()}


def get_model(kind: str, name: str):
    """Instantiate a registered model; unknown names list the alternatives."""
    if kind not in _REGISTRIES:
        raise ExportError(f"unknown model kind {kind!r}")
    registry = _REGISTRIES[kind]
    if name not in registry:
        raise ExportError(
            f"unknown {kind} model {name!r}; available: {', '.join(sorted(registry))}"
        )
    return registry[name]()


def available_models() -> dict[str, list[str]]:
    return {kind: sorted(names) for kind, names in _REGISTRIES.items()}
