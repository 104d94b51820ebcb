"""Shared fixtures and the acceptance-summary terminal hook."""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from refvlm.labels import FoulType, Severity
from refvlm.model.types import VideoClip

ACCEPTANCE_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(criterion, description): marks a test as an acceptance criterion"
    )


def pytest_runtest_makereport(item, call):
    if call.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    criterion = marker.args[0]
    description = marker.args[1] if len(marker.args) > 1 else item.name
    passed = call.excinfo is None
    prev_passed, _ = ACCEPTANCE_RESULTS.get(criterion, (True, description))
    ACCEPTANCE_RESULTS[criterion] = (prev_passed and passed, description)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE_RESULTS):
        passed, description = ACCEPTANCE_RESULTS[criterion]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {criterion:>2}: {status} - {description}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_clip(rng):
    return VideoClip(
        frames=rng.uniform(0.0, 1.0, size=(4, 16, 16, 3)),
        clip_id="clip_test",
        foul_frame_index=2,
    )


@pytest.fixture
def all_fouls():
    return list(FoulType)


@pytest.fixture
def all_severities():
    return list(Severity)


@pytest.fixture(scope="session")
def toy_bundle(tmp_path_factory):
    """A small on-disk dataset plus trained stage-1/stage-2 checkpoints.

    Shared by the service and CLI tests; sized for mechanics rather than
    accuracy, so it trains in seconds.
    """
    from refvlm.data.joins import labeled_clips, stage2_examples
    from refvlm.data.manifest import load_dataset
    from refvlm.data.synthetic import generate_synthetic_dataset
    from refvlm.training.config import ArchConfig, Stage1Config, Stage2Config
    from refvlm.training.stage1 import train_stage1
    from refvlm.training.stage2 import train_stage2

    root = tmp_path_factory.mktemp("toy_bundle")
    dataset_dir = root / "data"
    manifest_path = generate_synthetic_dataset(
        dataset_dir, n_clips=32, frames_per_clip=4, frame_size=8, seed=5, train_fraction=0.75,
    )
    arch = ArchConfig(
        patch_size=4, encoder_hidden_dim=16, encoder_feature_dim=16, encoder_depth=1,
        encoder_heads=2, lm_embed_dim=32, lm_layers=2, lm_heads=2, lm_ffn_dim=64,
        lm_context_window=512,
    )
    clips, triplets = load_dataset(manifest_path)
    train = labeled_clips(clips, dataset_dir, frames_per_clip=4, split="train")
    s1_cfg = Stage1Config(learning_rate=1e-2, epochs=40, batch_size=8, frames_per_clip=4, seed=0)
    stage1_manifest, _ = train_stage1(train, s1_cfg, arch, root / "stage1")

    examples = stage2_examples(clips, triplets, dataset_dir, frames_per_clip=4, split="train")
    s2_cfg = Stage2Config(learning_rate=5e-3, epochs=12, batch_size=8, trainable_fraction=0.5,
                          adapter_rank=8, seed=0, base_warmup_steps=300)
    stage2_manifest, freeze_report, _ = train_stage2(examples, stage1_manifest, s2_cfg, root / "stage2")

    return SimpleNamespace(
        root=root,
        dataset_dir=dataset_dir,
        manifest_path=manifest_path,
        arch=arch,
        stage1_dir=root / "stage1",
        stage2_dir=root / "stage2",
        stage1_manifest=stage1_manifest,
        stage2_manifest=stage2_manifest,
        freeze_report=freeze_report,
        clips=clips,
        triplets=triplets,
    )
