from .types import (
    ClassifierBundle,
    EncoderOutput,
    PromptSegment,
    PromptSequence,
    SpatioTemporalFeatures,
    VideoClip,
    VisualTokens,
)
from .pooling import build_spatiotemporal, pool_spatial, pool_temporal, pool_video_level
from .encoder import TinyVisionEncoder, VisionEncoder, encode_video
from .projection import VisualProjection, project_features
from .heads import ClassificationHeads, classify
from .prompt import (
    ASSISTANT_MARKER,
    USER_PREFIX,
    append_answer,
    append_follow_up,
    assemble_prompt,
    render_prompt_prefix,
)
from .lm import ContextOverflowError, TinyCausalLM, generate_answer
from .adapters import (
    AdapterSpec,
    LowRankAdapter,
    attach_adapters,
    named_adapter_parameters,
    named_base_parameters,
    select_trainable_parameters,
)
from .pipeline import InferencePipeline, InferenceResult

__all__ = [
    "ClassifierBundle",
    "EncoderOutput",
    "PromptSegment",
    "PromptSequence",
    "SpatioTemporalFeatures",
    "VideoClip",
    "VisualTokens",
    "build_spatiotemporal",
    "pool_spatial",
    "pool_temporal",
    "pool_video_level",
    "TinyVisionEncoder",
    "VisionEncoder",
    "encode_video",
    "VisualProjection",
    "project_features",
    "ClassificationHeads",
    "classify",
    "ASSISTANT_MARKER",
    "USER_PREFIX",
    "append_answer",
    "append_follow_up",
    "assemble_prompt",
    "render_prompt_prefix",
    "ContextOverflowError",
    "TinyCausalLM",
    "generate_answer",
    "AdapterSpec",
    "LowRankAdapter",
    "attach_adapters",
    "named_adapter_parameters",
    "named_base_parameters",
    "select_trainable_parameters",
    "InferencePipeline",
    "InferenceResult",
]
