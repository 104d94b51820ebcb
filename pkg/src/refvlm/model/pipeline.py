"""End-to-end inference: clip -> predictions -> prompt -> generated answer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import torch

from ..labels import FoulType, Severity
from .encoder import VisionEncoder, encode_video
from .heads import ClassificationHeads, classify
from .lm import TinyCausalLM, generate_answer
from .pooling import build_spatiotemporal, pool_video_level
from .projection import VisualProjection, project_features
from .prompt import assemble_prompt
from .types import ClassifierBundle, PromptSequence, VideoClip, VisualTokens

PromptHook = Callable[[PromptSequence, str], None]


@dataclass
class InferenceResult:
    clip_id: str
    question: str
    answer: str
    predicted_foul: FoulType
    predicted_severity: Severity
    prompt: PromptSequence


class InferencePipeline:
    """Holds frozen model handles and runs the full forward path.

    Weights are treated as immutable; any number of concurrent readers may
    call `infer`. The `encoder_calls` counter exists so callers (and tests)
    can verify visual tokens are cached rather than recomputed per chat turn.
    """

    def __init__(
        self,
        encoder: VisionEncoder,
        heads: ClassificationHeads,
        projection: Optional[VisualProjection] = None,
        lm: Optional[TinyCausalLM] = None,
        include_predictions: bool = True,
    ):
        self.encoder = encoder
        self.heads = heads
        self.projection = projection
        self.lm = lm
        self.include_predictions = include_predictions
        self.encoder_calls = 0

    @property
    def generative(self) -> bool:
        return self.projection is not None and self.lm is not None

    def classify_clip(self, clip: VideoClip) -> ClassifierBundle:
        self.encoder_calls += 1
        with torch.no_grad():
            out = encode_video(clip, self.encoder)
            f = pool_video_level(out.frame_features)
        return classify(f, self.heads)

    def encode_clip(self, clip: VideoClip):
        """One encoder pass yielding both the visual tokens and the predictions."""
        if not self.generative:
            raise RuntimeError("pipeline was built without a projection/LM; generation unavailable")
        self.encoder_calls += 1
        with torch.no_grad():
            out = encode_video(clip, self.encoder)
            f = pool_video_level(out.frame_features)
            bundle = classify(f, self.heads)
            features = build_spatiotemporal(out.hidden_states)
            visual = project_features(features, self.projection, clip_id=clip.clip_id)
        return visual, bundle

    def build_prompt(
        self,
        question: str,
        visual: VisualTokens,
        bundle: ClassifierBundle,
        answer: Optional[str] = None,
    ) -> PromptSequence:
        foul = bundle.predicted_foul if self.include_predictions else None
        severity = bundle.predicted_severity if self.include_predictions else None
        return assemble_prompt(question, foul, severity, visual, answer=answer, tokenizer=self.lm.tokenizer)

    def infer(
        self,
        clip: VideoClip,
        question: str,
        max_new_tokens: int = 48,
        decoding: str = "greedy",
        seed: Optional[int] = None,
        prompt_hook: Optional[PromptHook] = None,
    ) -> InferenceResult:
        visual, bundle = self.encode_clip(clip)
        prompt = self.build_prompt(question, visual, bundle)
        if prompt_hook is not None:
            prompt_hook(prompt, clip.clip_id)
        answer = generate_answer(prompt, self.lm, max_new_tokens=max_new_tokens, decoding=decoding, seed=seed)
        return InferenceResult(
            clip_id=clip.clip_id,
            question=question,
            answer=answer,
            predicted_foul=bundle.predicted_foul,
            predicted_severity=bundle.predicted_severity,
            prompt=prompt,
        )
