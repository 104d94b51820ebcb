"""Stage-1 trainer: oracles, overfit behaviour, determinism, accumulation."""

import numpy as np
import pytest
import torch

from refvlm.labels import FoulType, Severity
from refvlm.model.types import VideoClip
from refvlm.training import (
    ArchConfig,
    Stage1Config,
    load_stage1_handles,
    train_stage1,
)
from refvlm.training.checkpoint import build_stage1_modules, module_digest
from refvlm.training.stage1 import DivergenceError, LabeledClip, MissingLabelError, predict_labels

ARCH = ArchConfig(patch_size=4, encoder_hidden_dim=16, encoder_feature_dim=16,
                  encoder_depth=1, encoder_heads=2)


def pattern_clip(foul: FoulType, severity: Severity, seed: int) -> VideoClip:
    rng = np.random.default_rng(seed)
    frames = rng.uniform(0.05, 0.2, size=(2, 16, 16, 3))
    frames[:, :8, 2 * int(foul) : 2 * int(foul) + 2, :] = 0.95
    frames[:, 8:, 4 * int(severity) : 4 * int(severity) + 4, :] = 0.85
    return VideoClip(frames=frames, clip_id=f"p{seed}", foul_frame_index=0)


@pytest.fixture(scope="module")
def eight_clip_batch():
    # one clip per foul type, severities cycling
    return [
        LabeledClip(pattern_clip(f, Severity(int(f) % 4), seed=int(f)), f, Severity(int(f) % 4))
        for f in FoulType
    ]


def test_missing_label_is_rejected(eight_clip_batch, tmp_path):
    bad = list(eight_clip_batch)
    bad[0] = LabeledClip(bad[0].clip, None, bad[0].severity)
    with pytest.raises(MissingLabelError):
        train_stage1(bad, Stage1Config(epochs=1, batch_size=8, frames_per_clip=2), ARCH, tmp_path)


def test_epochs_zero_equals_initialization(tmp_path):
    clips = [
        LabeledClip(pattern_clip(FoulType.TACKLING, Severity.NO_OFFENCE, 1),
                    FoulType.TACKLING, Severity.NO_OFFENCE)
    ]
    cfg = Stage1Config(epochs=0, batch_size=8, frames_per_clip=2, seed=3)
    manifest, history = train_stage1(clips, cfg, ARCH, tmp_path)
    assert history == []
    encoder, heads = build_stage1_modules(ARCH, seed=3)
    assert manifest.digests["encoder"] == module_digest(encoder)
    assert manifest.digests["heads"] == module_digest(heads)


def test_one_batch_overfit_reaches_perfect_training_accuracy(eight_clip_batch, tmp_path):
    cfg = Stage1Config(learning_rate=1e-2, epochs=200, batch_size=8, frames_per_clip=2, seed=0)
    manifest, history = train_stage1(eight_clip_batch, cfg, ARCH, tmp_path)
    assert len(history) == 200  # one batch per epoch
    encoder, heads = load_stage1_handles(manifest)
    bundles = predict_labels(encoder, heads, [ex.clip for ex in eight_clip_batch])
    assert all(b.predicted_foul == ex.foul for b, ex in zip(bundles, eight_clip_batch))
    assert all(b.predicted_severity == ex.severity for b, ex in zip(bundles, eight_clip_batch))


def test_loss_non_increasing_over_epochs_on_one_batch(eight_clip_batch, tmp_path):
    cfg = Stage1Config(learning_rate=1e-3, epochs=40, batch_size=8, frames_per_clip=2, seed=0)
    _, history = train_stage1(eight_clip_batch, cfg, ARCH, tmp_path)
    losses = [h.loss for h in history]
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))


def test_logged_loss_matches_per_task_oracle(eight_clip_batch, tmp_path):
    captured = []

    def hook(step, foul_logits, sev_logits, foul_t, sev_t, loss):
        captured.append((foul_logits.numpy(), sev_logits.numpy(),
                         foul_t.numpy(), sev_t.numpy(), loss))

    cfg = Stage1Config(learning_rate=1e-3, epochs=5, batch_size=4, frames_per_clip=2, seed=1)
    train_stage1(eight_clip_batch, cfg, ARCH, tmp_path, step_hook=hook)
    assert captured

    def ce(logits, target):
        m = max(logits)
        exps = [np.exp(v - m) for v in logits]
        return -(np.log(exps[target] / sum(exps)))

    for foul_logits, sev_logits, foul_t, sev_t, loss in captured:
        total = 0.0
        for i in range(foul_logits.shape[0]):
            total += ce(list(foul_logits[i]), int(foul_t[i])) / foul_logits.shape[0]
            total += ce(list(sev_logits[i]), int(sev_t[i])) / sev_logits.shape[0]
        assert loss == pytest.approx(total, abs=1e-6)


def test_same_seed_reproduces_identical_digests(eight_clip_batch, tmp_path):
    cfg = Stage1Config(learning_rate=2e-3, epochs=3, batch_size=4, frames_per_clip=2, seed=11)
    m1, _ = train_stage1(eight_clip_batch, cfg, ARCH, tmp_path / "a")
    m2, _ = train_stage1(eight_clip_batch, cfg, ARCH, tmp_path / "b")
    assert m1.digests == m2.digests


def test_gradient_accumulation_invariant_to_micro_batch_split(eight_clip_batch, tmp_path):
    base = Stage1Config(learning_rate=1e-3, epochs=1, batch_size=8, frames_per_clip=2, seed=5)
    split = Stage1Config(learning_rate=1e-3, epochs=1, batch_size=8, frames_per_clip=2,
                         seed=5, micro_batch_size=3)
    m_full, h_full = train_stage1(eight_clip_batch, base, ARCH, tmp_path / "full")
    m_split, h_split = train_stage1(eight_clip_batch, split, ARCH, tmp_path / "split")
    assert h_full[0].loss == pytest.approx(h_split[0].loss, abs=1e-10)
    enc_a, heads_a = load_stage1_handles(m_full)
    enc_b, heads_b = load_stage1_handles(m_split)
    for pa, pb in zip(enc_a.parameters(), enc_b.parameters()):
        torch.testing.assert_close(pa, pb, atol=1e-5, rtol=0)
    for pa, pb in zip(heads_a.parameters(), heads_b.parameters()):
        torch.testing.assert_close(pa, pb, atol=1e-5, rtol=0)


def test_divergence_is_reported(eight_clip_batch, tmp_path):
    # a step this large overflows the forward pass, which must surface as divergence
    cfg = Stage1Config(learning_rate=1e200, epochs=60, batch_size=8, frames_per_clip=2, seed=0)
    with pytest.raises(DivergenceError):
        train_stage1(eight_clip_batch, cfg, ARCH, tmp_path)


def test_checkpoint_round_trip_preserves_logits(eight_clip_batch, tmp_path):
    cfg = Stage1Config(learning_rate=2e-3, epochs=2, batch_size=8, frames_per_clip=2, seed=2)
    manifest, _ = train_stage1(eight_clip_batch, cfg, ARCH, tmp_path)
    encoder, heads = load_stage1_handles(manifest)
    probe = eight_clip_batch[0].clip
    before = predict_labels(encoder, heads, [probe])[0]
    from refvlm.training.checkpoint import CheckpointManifest

    reloaded = CheckpointManifest.load(tmp_path)
    enc2, heads2 = load_stage1_handles(reloaded)
    after = predict_labels(enc2, heads2, [probe])[0]
    np.testing.assert_allclose(before.foul_logits, after.foul_logits, atol=1e-6)
    np.testing.assert_allclose(before.severity_logits, after.severity_logits, atol=1e-6)
