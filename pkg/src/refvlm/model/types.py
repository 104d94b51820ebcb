"""Domain types for the video-to-explanation forward path.

Arrays held by these types may be numpy arrays (reference / evaluation paths)
or torch tensors (inside a training graph). Construction validates the
structural invariants each type promises; numerical content is validated by
the operations that produce it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Union

import numpy as np

from ..labels import FoulType, Severity
from ..validation import ShapeError, check_finite, check_rank


@dataclass(frozen=True)
class VideoClip:
    """A T x H x W x C frame array centred on a foul event."""

    frames: np.ndarray
    clip_id: str
    foul_frame_index: int
    fps: float = 25.0

    def __post_init__(self):
        from ..validation import check_frames

        check_frames(self.frames, f"clip {self.clip_id!r} frames")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])


@dataclass
class EncoderOutput:
    """Per-frame encoder outputs.

    frame_features: T x D1, one summary vector per frame.
    hidden_states:  T x S x D2 patch-token embeddings; the encoder's global
                    summary token is excluded, so S counts patch tokens only.
    """

    frame_features: "np.ndarray"
    hidden_states: "np.ndarray"
    patch_size: int
    token_count: int

    def __post_init__(self):
        check_rank(self.frame_features, 2, "frame_features")
        check_rank(self.hidden_states, 3, "hidden_states")
        t_f = self.frame_features.shape[0]
        t_h, s = self.hidden_states.shape[0], self.hidden_states.shape[1]
        if t_f != t_h:
            raise ShapeError(f"frame_features has {t_f} frames but hidden_states has {t_h}")
        if s != self.token_count:
            raise ShapeError(f"hidden_states has {s} tokens per frame, expected {self.token_count}")
        check_finite(self.frame_features, "frame_features")
        check_finite(self.hidden_states, "hidden_states")


@dataclass
class SpatioTemporalFeatures:
    """Temporal (S x D2) and spatial (T x D2) pooled features plus their concatenation."""

    temporal: "np.ndarray"
    spatial: "np.ndarray"
    combined: "np.ndarray"

    def __post_init__(self):
        s, t = self.temporal.shape[0], self.spatial.shape[0]
        if self.combined.shape[0] != s + t:
            raise ShapeError(
                f"combined must have S+T = {s + t} rows, got {self.combined.shape[0]}"
            )

    @property
    def n_tokens(self) -> int:
        return int(self.combined.shape[0])


@dataclass
class VisualTokens:
    """Projected spatio-temporal features, ready to sit inline in a prompt."""

    tokens: "np.ndarray"
    source_clip_id: str

    def __post_init__(self):
        check_rank(self.tokens, 2, "visual tokens")

    def __len__(self) -> int:
        return int(self.tokens.shape[0])


@dataclass
class ClassifierBundle:
    """Video-level feature plus both heads' logits and argmax predictions."""

    video_level_feature: np.ndarray
    foul_logits: np.ndarray
    severity_logits: np.ndarray
    predicted_foul: FoulType
    predicted_severity: Severity

    def __post_init__(self):
        if self.foul_logits.shape != (len(FoulType),):
            raise ShapeError(f"foul_logits must have shape (8,), got {self.foul_logits.shape}")
        if self.severity_logits.shape != (len(Severity),):
            raise ShapeError(
                f"severity_logits must have shape (4,), got {self.severity_logits.shape}"
            )


TextPayload = List[int]
VisualPayload = VisualTokens


@dataclass
class PromptSegment:
    kind: str  # "text" | "visual"
    payload: Union[TextPayload, VisualPayload]

    def __post_init__(self):
        if self.kind not in ("text", "visual"):
            raise ValueError(f"segment kind must be 'text' or 'visual', got {self.kind!r}")

    def __len__(self) -> int:
        return len(self.payload)


@dataclass
class PromptSequence:
    """Ordered text/visual segments with a per-position answer mask.

    The answer mask is False on every prompt position and True exactly on
    positions appended after the assistant marker (answer tokens and the
    end-of-answer token). Its length always equals the total number of
    positions across all segments.
    """

    segments: List[PromptSegment] = field(default_factory=list)
    answer_mask: List[bool] = field(default_factory=list)

    def __post_init__(self):
        if len(self.answer_mask) != len(self):
            raise ShapeError(
                f"answer_mask has {len(self.answer_mask)} entries for {len(self)} positions"
            )

    def __len__(self) -> int:
        return sum(len(seg) for seg in self.segments)

    def append_text(self, token_ids: List[int], answer: bool = False) -> None:
        self.segments.append(PromptSegment("text", list(token_ids)))
        self.answer_mask.extend([answer] * len(token_ids))

    def append_visual(self, tokens: VisualTokens) -> None:
        self.segments.append(PromptSegment("visual", tokens))
        self.answer_mask.extend([False] * len(tokens))

    def text_token_ids(self) -> List[int]:
        """All text token ids in order (visual positions skipped)."""
        ids: List[int] = []
        for seg in self.segments:
            if seg.kind == "text":
                ids.extend(seg.payload)
        return ids

    def target_ids(self, pad_id: int) -> np.ndarray:
        """Per-position token targets; visual positions get pad_id."""
        out = []
        for seg in self.segments:
            if seg.kind == "text":
                out.extend(int(i) for i in seg.payload)
            else:
                out.extend([pad_id] * len(seg))
        return np.asarray(out, dtype=np.int64)

    def visual_position_count(self) -> int:
        return sum(len(seg) for seg in self.segments if seg.kind == "visual")
