import pytest

from memfuse.datamodel import KNOWN_COMPONENTS, FusionConfig, PredictionTable


@pytest.fixture
def paper_cfg() -> FusionConfig:
    return FusionConfig.paper()


# Six hand-built videos covering both pathways, the threshold boundary, and
# both gate extremes.  Expected fused values are decimal hand computations
# (0.4*f + 0.47*a + 0.13*s on the audio pathway, 0.38*f + 0.62*c off it).
SIX_VIDEOS = [
    # id, gestalt, frame, caption, aug_caption, spectrogram, bayesian_ridge
    ("v1", 0.90, 0.50, 0.30, 0.60, 0.80, 0.40),
    ("v2", 0.10, 0.20, 0.70, 0.10, 0.90, 0.10),
    ("v3", 0.80, 1.00, 0.20, 0.00, 0.50, 0.25),  # boundary: routes with audio
    ("v4", 0.50, 0.90, 0.90, 0.40, 0.30, 0.70),
    ("v5", 1.00, 0.25, 0.10, 0.50, 0.75, 0.20),
    ("v6", 0.79, 0.00, 1.00, 0.90, 0.10, 0.80),  # just below: no audio
]

SIX_EXPECTED = {
    # spectrogram as the audio column
    "v1": ("with_audio", 0.586),     # 0.4*0.5 + 0.47*0.6 + 0.13*0.8
    "v2": ("without_audio", 0.510),  # 0.38*0.2 + 0.62*0.7
    "v3": ("with_audio", 0.465),     # 0.4*1.0 + 0.47*0.0 + 0.13*0.5
    "v4": ("without_audio", 0.900),  # 0.38*0.9 + 0.62*0.9
    "v5": ("with_audio", 0.4325),    # 0.4*0.25 + 0.47*0.5 + 0.13*0.75
    "v6": ("without_audio", 0.620),  # 0.38*0.0 + 0.62*1.0
}


@pytest.fixture
def six_video_table() -> tuple[PredictionTable, dict[str, float]]:
    table = PredictionTable(KNOWN_COMPONENTS)
    gestalt = {}
    for vid, g, frame, caption, aug, spec, ridge in SIX_VIDEOS:
        table.add_row(
            vid,
            {
                "frame": frame,
                "caption": caption,
                "aug_caption": aug,
                "spectrogram": spec,
                "bayesian_ridge": ridge,
            },
        )
        gestalt[vid] = g
    return table, gestalt
