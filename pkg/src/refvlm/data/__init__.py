from .records import CANONICAL_QUESTIONS, ClipRecord, CorpusStats, VqaTriplet
from .media import MediaError, read_frames, write_npy_clip
from .manifest import COLUMNS, DanglingClipError, SchemaError, load_dataset, write_manifest
from .sampling import FrameIndexError, sample_frames, window_indices
from .splits import DegenerateSplitError, SplitSpec, apply_split, split_dataset
from .stats import corpus_statistics, tokenize, write_word_table
from .synthetic import (
    ANSWER_TEMPLATES,
    SyntheticDataset,
    build_synthetic_dataset,
    generate_synthetic_dataset,
    materialize,
    pattern_frames,
)
from .joins import labeled_clips, stage2_examples

__all__ = [
    "CANONICAL_QUESTIONS",
    "ClipRecord",
    "CorpusStats",
    "VqaTriplet",
    "MediaError",
    "read_frames",
    "write_npy_clip",
    "COLUMNS",
    "DanglingClipError",
    "SchemaError",
    "load_dataset",
    "write_manifest",
    "FrameIndexError",
    "sample_frames",
    "window_indices",
    "DegenerateSplitError",
    "SplitSpec",
    "apply_split",
    "split_dataset",
    "corpus_statistics",
    "tokenize",
    "write_word_table",
    "ANSWER_TEMPLATES",
    "SyntheticDataset",
    "build_synthetic_dataset",
    "generate_synthetic_dataset",
    "materialize",
    "pattern_frames",
    "labeled_clips",
    "stage2_examples",
]
