from .config import ArchConfig, Stage1Config, Stage2Config
from .checkpoint import (
    CheckpointError,
    CheckpointManifest,
    DigestMismatchError,
    MissingFileError,
    build_lm,
    build_projection,
    build_stage1_modules,
    file_digest,
    load_stage1_handles,
    load_stage2_handles,
    load_tensors,
    module_digest,
    module_tensors,
    save_tensors,
)
from .stage1 import (
    DivergenceError,
    LabeledClip,
    MissingLabelError,
    StepRecord,
    multitask_loss,
    predict_labels,
    train_stage1,
)
from .stage2 import (
    FreezeReport,
    FrozenViolationError,
    MaskEmptyError,
    Stage2Example,
    answer_token_loss,
    train_stage2,
)

__all__ = [
    "ArchConfig",
    "Stage1Config",
    "Stage2Config",
    "CheckpointError",
    "CheckpointManifest",
    "DigestMismatchError",
    "MissingFileError",
    "build_lm",
    "build_projection",
    "build_stage1_modules",
    "file_digest",
    "load_stage1_handles",
    "load_stage2_handles",
    "load_tensors",
    "module_digest",
    "module_tensors",
    "save_tensors",
    "DivergenceError",
    "LabeledClip",
    "MissingLabelError",
    "StepRecord",
    "multitask_loss",
    "predict_labels",
    "train_stage1",
    "FreezeReport",
    "FrozenViolationError",
    "MaskEmptyError",
    "Stage2Example",
    "answer_token_loss",
    "train_stage2",
]
