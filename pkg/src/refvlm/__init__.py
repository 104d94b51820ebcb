"""refvlm: foul recognition and referee-style explanation generation for football clips.

The package covers the full desk-scale pipeline: a toy vision encoder with
multi-task classification heads, spatio-temporal pooling and projection into
a toy language model's embedding space, prediction-conditioned prompt
assembly, two-stage training with digest-verified freezing, dataset
ingestion and statistics, the evaluation stack (classification metrics,
label extraction from generated text, agreement analysis, blind rating
studies), an HTTP service, and a CLI.
"""

__version__ = "0.1.0"

from .labels import FoulType, Severity, FOUL_TYPE_NAMES, SEVERITY_NAMES
from .tokenizer import ByteTokenizer

__all__ = [
    "FoulType",
    "Severity",
    "FOUL_TYPE_NAMES",
    "SEVERITY_NAMES",
    "ByteTokenizer",
    "__version__",
]
