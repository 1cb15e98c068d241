"""memexport: batch inference adapters emitting engine-ready feature files."""

from .errors import ExportError
from .jobs import (
    ExportJob,
    export_embeddings,
    export_features,
    export_predictions,
    export_tags,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportJob",
    "export_embeddings",
    "export_features",
    "export_predictions",
    "export_tags",
    "write_report",
    "__version__",
]
