"""Linear projection from encoder feature space into the LM embedding space."""

from __future__ import annotations

import torch
import torch.nn as nn

from ..validation import ShapeError, is_tensor
from .blocks import init_linear, seeded_generator
from .types import SpatioTemporalFeatures, VisualTokens


class VisualProjection(nn.Module):
    """Single linear map D2 -> E applied row-wise to spatio-temporal features."""

    def __init__(self, in_dim: int, out_dim: int, seed: int = 0, dtype: torch.dtype = torch.float64):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.linear = init_linear(nn.Linear(in_dim, out_dim, dtype=dtype), seeded_generator(seed))

    def forward(self, rows: torch.Tensor) -> torch.Tensor:
        return self.linear(rows)


def project_features(features: SpatioTemporalFeatures, projection, clip_id: str = "") -> VisualTokens:
    """Project each combined row through the linear map, preserving row count.

    `projection` is any callable mapping (N, D2) -> (N, E); the trained
    `VisualProjection` module is the usual argument.
    """
    combined = features.combined
    in_dim = getattr(projection, "in_dim", None)
    if in_dim is not None and combined.shape[1] != in_dim:
        raise ShapeError(
            f"projection expects input width {in_dim}, got {combined.shape[1]}"
        )
    rows = combined if is_tensor(combined) else torch.as_tensor(combined)
    if in_dim is None and hasattr(projection, "linear"):
        in_dim = projection.linear.in_features
    try:
        tokens = projection(rows)
    except RuntimeError as exc:  # torch reports width mismatches as RuntimeError
        raise ShapeError(str(exc)) from exc
    if tokens.shape[0] != combined.shape[0]:
        raise ShapeError("projection must preserve the number of rows")
    return VisualTokens(tokens=tokens, source_clip_id=clip_id)
