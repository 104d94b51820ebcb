"""Training configs and the toy architecture description.

Stage defaults follow the published recipe (stage 1: lr 5e-6 for 14 epochs at
an effective batch of 64 with 16 frames per clip; stage 2: lr 2e-4 for 3
epochs at batch 32 with a 1% trainable-layer budget). Desk-scale runs
override these per test; the defaults are the record of the recipe.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict, Optional


@dataclass(frozen=True)
class ArchConfig:
    """Shapes of the toy encoder, projection, and LM; stored in every manifest."""

    patch_size: int = 4
    encoder_hidden_dim: int = 32   # D2
    encoder_feature_dim: int = 32  # D1
    encoder_depth: int = 2
    encoder_heads: int = 4
    lm_embed_dim: int = 64         # E
    lm_layers: int = 4
    lm_heads: int = 4
    lm_ffn_dim: int = 256
    lm_context_window: int = 512

    def to_dict(self) -> Dict[str, str]:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: Dict[str, str]) -> "ArchConfig":
        kwargs = {f.name: int(d[f.name]) for f in fields(cls) if f.name in d}
        return cls(**kwargs)


@dataclass(frozen=True)
class Stage1Config:
    """Multi-task encoder fine-tuning."""

    learning_rate: float = 5e-6
    epochs: int = 14
    batch_size: int = 64
    frames_per_clip: int = 16
    seed: int = 0
    micro_batch_size: Optional[int] = None  # gradient accumulation; None = full batch

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs, and batch_size must be positive")
        if self.frames_per_clip < 2 or self.frames_per_clip % 2 != 0:
            raise ValueError("frames_per_clip must be a positive even number")
        if self.micro_batch_size is not None and self.micro_batch_size < 1:
            raise ValueError("micro_batch_size must be >= 1")


@dataclass(frozen=True)
class Stage2Config:
    """Frozen-encoder alignment: projection plus low-rank LM adapters."""

    learning_rate: float = 2e-4
    epochs: int = 3
    batch_size: int = 32
    trainable_fraction: float = 0.01
    adapter_rank: int = 4
    seed: int = 0
    micro_batch_size: Optional[int] = None
    max_answer_tokens: int = 64
    base_warmup_steps: int = 0     # optional LM-objective warmup standing in for pretrained base weights
    base_warmup_lr: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.trainable_fraction <= 1.0):
            raise ValueError("trainable_fraction must lie in (0, 1]")
        if self.adapter_rank < 1:
            raise ValueError("adapter_rank must be >= 1")
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs, and batch_size must be positive")


def config_to_dict(cfg) -> Dict[str, str]:
    return {f.name: repr(getattr(cfg, f.name)) for f in fields(cfg)}
