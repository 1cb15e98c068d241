"""memfuse: gestalt-gated late fusion for video memorability prediction.

Per-modality model predictions (frames, captions, audio) are combined by a
convex weighted sum, with the weight set chosen per video by comparing its
audio gestalt score against a threshold.  Submodules: datamodel (types and
file formats), gestalt (proxy features and scoring), metrics (Spearman),
dsp (wav -> MFCC/delta tensors), regression (Bayesian ridge on audio
embeddings), fusion (the gate), optimizer (randomized weight search and the
threshold sweep), synthgen (planted synthetic data), cli.
"""

from .datamodel import (
    FusionConfig,
    GestaltFeatures,
    PredictionTable,
    TagSet,
    VideoRecord,
)
from .errors import SchemaError
from .fusion import FusedPrediction, evaluate, predict_all, route
from .gestalt import GestaltWeights, gestalt_score
from .metrics import spearman

__version__ = "0.1.0"

__all__ = [
    "FusionConfig",
    "GestaltFeatures",
    "PredictionTable",
    "TagSet",
    "VideoRecord",
    "SchemaError",
    "FusedPrediction",
    "evaluate",
    "predict_all",
    "route",
    "GestaltWeights",
    "gestalt_score",
    "spearman",
    "__version__",
]
