"""Builds the small dataset + checkpoints the live console tests run against."""

import sys
from pathlib import Path

from refvlm.data.joins import labeled_clips, stage2_examples
from refvlm.data.manifest import load_dataset
from refvlm.data.synthetic import generate_synthetic_dataset
from refvlm.training.config import ArchConfig, Stage1Config, Stage2Config
from refvlm.training.stage1 import train_stage1
from refvlm.training.stage2 import train_stage2


def main(root: Path) -> None:
    if (root / "stage2" / "manifest.txt").exists():
        print("fixture already prepared")
        return
    data = root / "data"
    manifest = generate_synthetic_dataset(
        data, n_clips=32, frames_per_clip=4, frame_size=8, seed=5, train_fraction=0.75,
    )
    arch = ArchConfig(
        patch_size=4, encoder_hidden_dim=16, encoder_feature_dim=16, encoder_depth=1,
        encoder_heads=2, lm_embed_dim=32, lm_layers=2, lm_heads=2, lm_ffn_dim=64,
        lm_context_window=512,
    )
    clips, triplets = load_dataset(manifest)
    train = labeled_clips(clips, data, frames_per_clip=4, split="train")
    s1, _ = train_stage1(
        train,
        Stage1Config(learning_rate=1e-2, epochs=40, batch_size=8, frames_per_clip=4, seed=0),
        arch, root / "stage1",
    )
    examples = stage2_examples(clips, triplets, data, frames_per_clip=4, split="train")
    train_stage2(
        examples, s1,
        Stage2Config(learning_rate=5e-3, epochs=12, batch_size=8, trainable_fraction=0.5,
                     adapter_rank=8, seed=0, base_warmup_steps=300),
        root / "stage2",
    )
    print("fixture ready")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else ".fixture"))
