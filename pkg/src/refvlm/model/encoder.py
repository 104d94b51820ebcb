"""Vision encoder interface and the deterministic toy implementation.

The encoder contract is frames -> (per-frame feature vectors, per-frame patch
token embeddings). The toy encoder is a small ViT-style transformer: frames
are split into non-overlapping p x p patches, embedded, prefixed with a
learned global summary token, and run through a couple of attention blocks.
The summary token supplies the frame feature; the patch tokens supply the
hidden states, so the token count S is exactly (H/p) * (W/p).

A pretrained image-text encoder can be dropped in by implementing the same
`VisionEncoder` protocol; nothing downstream depends on the toy internals.
"""

from __future__ import annotations

from typing import Protocol, Tuple, runtime_checkable

import torch
import torch.nn as nn

from ..validation import NonFiniteError, ShapeError, check_frames, is_tensor
from .blocks import TransformerBlock, init_linear, seeded_generator, sinusoidal_positions
from .types import EncoderOutput, VideoClip


@runtime_checkable
class VisionEncoder(Protocol):
    patch_size: int
    feature_dim: int  # D1
    hidden_dim: int   # D2

    def encode(self, frames: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """frames (T, H, W, 3) -> (frame_features (T, D1), hidden_states (T, S, D2))."""
        ...


class TinyVisionEncoder(nn.Module):
    """Desk-scale ViT-style encoder, initialization a pure function of the seed."""

    def __init__(
        self,
        patch_size: int = 4,
        hidden_dim: int = 32,
        feature_dim: int = 32,
        depth: int = 2,
        n_heads: int = 4,
        ffn_dim: int | None = None,
        seed: int = 0,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.patch_size = patch_size
        self.hidden_dim = hidden_dim
        self.feature_dim = feature_dim
        self.depth = depth
        self.n_heads = n_heads
        self.ffn_dim = ffn_dim if ffn_dim is not None else 4 * hidden_dim
        self.seed = seed
        self.dtype = dtype

        gen = seeded_generator(seed)
        in_dim = patch_size * patch_size * 3
        self.patch_embed = init_linear(nn.Linear(in_dim, hidden_dim, dtype=dtype), gen)
        self.global_token = nn.Parameter(torch.randn(1, 1, hidden_dim, generator=gen, dtype=dtype) * 0.02)
        self.blocks = nn.ModuleList(
            TransformerBlock(hidden_dim, n_heads, self.ffn_dim, gen, dtype) for _ in range(depth)
        )
        self.norm = nn.LayerNorm(hidden_dim, dtype=dtype)
        self.feature_head = init_linear(nn.Linear(hidden_dim, feature_dim, dtype=dtype), gen)

    def patchify(self, frames: torch.Tensor) -> torch.Tensor:
        """(T, H, W, 3) -> (T, S, p*p*3) with row-major patch order."""
        t, h, w, c = frames.shape
        p = self.patch_size
        gh, gw = h // p, w // p
        x = frames.reshape(t, gh, p, gw, p, c)
        x = x.permute(0, 1, 3, 2, 4, 5)
        return x.reshape(t, gh * gw, p * p * c)

    def encode(self, frames: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        t = frames.shape[0]
        tokens = self.patch_embed(self.patchify(frames.to(self.dtype)))
        s = tokens.shape[1]
        summary = self.global_token.expand(t, 1, -1)
        x = torch.cat((summary, tokens), dim=1)
        x = x + sinusoidal_positions(s + 1, self.hidden_dim, self.dtype).unsqueeze(0)
        for block in self.blocks:
            x = block(x)
        x = self.norm(x)
        frame_features = self.feature_head(x[:, 0, :])
        hidden_states = x[:, 1:, :]  # global summary token dropped
        return frame_features, hidden_states

    forward = encode


def encode_video(clip: VideoClip, encoder: VisionEncoder) -> EncoderOutput:
    """Run the encoder over every frame of a clip.

    Raises ShapeError when H or W is not divisible by the encoder's patch
    size and NonFiniteError when the encoder emits NaN/Inf.
    """
    check_frames(clip.frames, f"clip {clip.clip_id!r} frames")
    p = encoder.patch_size
    t, h, w, _ = clip.frames.shape
    if h < p or w < p or h % p != 0 or w % p != 0:
        raise ShapeError(
            f"clip {clip.clip_id!r} is {h}x{w} but the encoder patch size is {p}; "
            "height and width must be divisible by the patch size"
        )
    frames = clip.frames
    if not is_tensor(frames):
        frames = torch.as_tensor(frames)
    frame_features, hidden_states = encoder.encode(frames)
    if not torch.isfinite(frame_features).all() or not torch.isfinite(hidden_states).all():
        raise NonFiniteError(f"encoder produced non-finite output for clip {clip.clip_id!r}")
    s = (h // p) * (w // p)
    return EncoderOutput(
        frame_features=frame_features,
        hidden_states=hidden_states,
        patch_size=p,
        token_count=s,
    )
