"""Multi-task classification heads over the video-level feature."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..labels import FoulType, N_FOUL_TYPES, N_SEVERITIES, Severity
from ..validation import NonFiniteError, check_finite, is_tensor, to_numpy
from .blocks import init_linear, seeded_generator
from .types import ClassifierBundle


class ClassificationHeads(nn.Module):
    """Two linear heads: foul type (D1 -> 8) and offence severity (D1 -> 4)."""

    def __init__(self, feature_dim: int, seed: int = 0, dtype: torch.dtype = torch.float64):
        super().__init__()
        self.feature_dim = feature_dim
        gen = seeded_generator(seed)
        self.foul_head = init_linear(nn.Linear(feature_dim, N_FOUL_TYPES, dtype=dtype), gen)
        self.severity_head = init_linear(nn.Linear(feature_dim, N_SEVERITIES, dtype=dtype), gen)

    def forward(self, f: torch.Tensor):
        return self.foul_head(f), self.severity_head(f)


def argmax_lowest_index(logits: np.ndarray) -> int:
    """Argmax with ties broken toward the lowest class index."""
    return int(np.argmax(logits))


def classify(f, heads: ClassificationHeads) -> ClassifierBundle:
    """Run both heads on a video-level feature and take per-task argmaxes."""
    check_finite(f, "video-level feature")
    x = f if is_tensor(f) else torch.as_tensor(f)
    dtype = heads.foul_head.weight.dtype
    with torch.no_grad():
        foul_logits, severity_logits = heads(x.to(dtype))
    foul_np = to_numpy(foul_logits)
    sev_np = to_numpy(severity_logits)
    if not np.isfinite(foul_np).all() or not np.isfinite(sev_np).all():
        raise NonFiniteError("classification heads produced non-finite logits")
    return ClassifierBundle(
        video_level_feature=to_numpy(x),
        foul_logits=foul_np,
        severity_logits=sev_np,
        predicted_foul=FoulType(argmax_lowest_index(foul_np)),
        predicted_severity=Severity(argmax_lowest_index(sev_np)),
    )
