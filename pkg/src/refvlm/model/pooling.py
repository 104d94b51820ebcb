"""Spatio-temporal pooling of per-frame token embeddings.

All four operations accept numpy arrays or torch tensors and preserve the
backend, so they can be used both as reference functions in evaluation code
and inside an autograd graph during training.
"""

from __future__ import annotations

from ..validation import ShapeError, check_finite, check_rank, concat_rows
from .types import SpatioTemporalFeatures


def pool_temporal(hidden_states):
    """Average T x S x D2 hidden states over frames, returning S x D2."""
    check_rank(hidden_states, 3, "hidden_states")
    if hidden_states.shape[0] == 0:
        raise ShapeError("cannot pool over the temporal dimension of an empty clip (T=0)")
    check_finite(hidden_states, "hidden_states")
    return hidden_states.mean(0)


def pool_spatial(hidden_states):
    """Average T x S x D2 hidden states over tokens, returning T x D2."""
    check_rank(hidden_states, 3, "hidden_states")
    if hidden_states.shape[1] == 0:
        raise ShapeError("cannot pool over the spatial dimension with zero tokens (S=0)")
    check_finite(hidden_states, "hidden_states")
    return hidden_states.mean(1)


def build_spatiotemporal(hidden_states) -> SpatioTemporalFeatures:
    """Concatenate temporal and spatial poolings into an (S+T) x D2 feature block.

    Row i of the combined block equals temporal row i for i < S and spatial
    row i - S for i >= S.
    """
    temporal = pool_temporal(hidden_states)
    spatial = pool_spatial(hidden_states)
    combined = concat_rows(temporal, spatial)
    return SpatioTemporalFeatures(temporal=temporal, spatial=spatial, combined=combined)


def pool_video_level(frame_features):
    """Average T x D1 frame features over frames into a single D1 vector."""
    check_rank(frame_features, 2, "frame_features")
    if frame_features.shape[0] == 0:
        raise ShapeError("cannot pool frame features of an empty clip (T=0)")
    check_finite(frame_features, "frame_features")
    return frame_features.mean(0)
