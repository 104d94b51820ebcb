"""Acceptance criteria, one test (or test group) per criterion.

The full two-stage pipeline runs through the CLI exactly as an operator
would drive it; the instrumented assertions (loss oracles, prompt capture)
run through the library with the same configuration. Each criterion prints
a PASS/FAIL line in the terminal summary (see conftest).
"""

import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest
from click.testing import CliRunner

from refvlm.cli import main as cli_main
from refvlm.data.joins import labeled_clips
from refvlm.data.manifest import load_dataset
from refvlm.eval.confusion import ConfusionMatrix, accuracy, balanced_accuracy
from refvlm.eval.extraction import extract_labels
from refvlm.eval.study import StudyItem, create_study, make_rating, study_summary
from refvlm.eval.tables import StudyRow, ClassificationRow, format_classification_table, format_study_table
from refvlm.labels import FoulType, Severity
from refvlm.model.pooling import build_spatiotemporal, pool_spatial, pool_temporal
from refvlm.model.projection import VisualProjection, project_features
from refvlm.training.checkpoint import CheckpointManifest, build_lm, load_stage2_handles
from refvlm.training.config import ArchConfig, Stage1Config, Stage2Config
from refvlm.training.stage1 import train_stage1
from refvlm.training.stage2 import train_stage2

from test_extraction import CURATED, NO_EVIDENCE

RUNNER = CliRunner()

# configuration of the desk-scale pipeline (also exercised standalone below)
STAGE1_ARGS = ["--epochs", "30", "--learning-rate", "3e-3", "--batch-size", "32",
               "--frames-per-clip", "8", "--seed", "0"]
STAGE2_ARGS = ["--epochs", "20", "--learning-rate", "3e-3", "--batch-size", "8",
               "--trainable-fraction", "0.5", "--adapter-rank", "8",
               "--base-warmup-steps", "800", "--seed", "0"]


def run_cli(args):
    result = RUNNER.invoke(cli_main, args)
    assert result.exit_code == 0, f"CLI failed: {args}\n{result.output}"
    return result


def run_chain(root: Path) -> SimpleNamespace:
    """make-synthetic && train-stage1 && train-stage2 && eval-generate && agreement."""
    data = root / "data"
    run_cli(["make-synthetic", "--out", str(data), "--clips", "256", "--frames", "8",
             "--size", "16", "--seed", "0"])
    manifest_csv = data / "manifest.csv"
    s1 = root / "stage1"
    run_cli(["train-stage1", "--dataset", str(manifest_csv), "--out", str(s1)] + STAGE1_ARGS)
    s2 = root / "stage2"
    run_cli(["train-stage2", "--dataset", str(manifest_csv),
             "--manifest", str(s1 / "manifest.txt"), "--out", str(s2)] + STAGE2_ARGS)
    gen = root / "gen"
    run_cli(["eval-generate", "--dataset", str(manifest_csv),
             "--manifest", str(s2 / "manifest.txt"), "--out", str(gen),
             "--max-new-tokens", "64", "--seed", "0"])
    agr = root / "agreement"
    run_cli(["agreement", "--records", str(gen / "records.csv"), "--out", str(agr), "--seed", "0"])
    return SimpleNamespace(root=root, data=data, manifest_csv=manifest_csv,
                           stage1=s1, stage2=s2, gen=gen, agreement=agr)


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    start = time.monotonic()
    chain = run_chain(tmp_path_factory.mktemp("acceptance_e2e"))
    chain.elapsed = time.monotonic() - start
    return chain


def report_metrics(path: Path) -> dict:
    metrics = {}
    section = None
    for line in (path / "run_report.txt").read_text().splitlines():
        if line.startswith("["):
            section = line.strip("[]")
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            metrics[f"{section}.{key}" if section else key] = value
    return metrics


# --- criterion 1 -------------------------------------------------------------

@pytest.mark.acceptance(1, "pooling/concatenation/projection match loop oracles (200 random instances)")
def test_criterion_1_pooling_projection_oracles():
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    for case in range(200):
        t = int(rng.integers(1, 9))
        s = int(rng.integers(1, 17))
        d2 = int(rng.integers(1, 33))
        e = int(rng.integers(1, 17))
        h = rng.normal(size=(t, s, d2))

        temporal = pool_temporal(h)
        spatial = pool_spatial(h)
        for j in range(s):
            for k in range(d2):
                assert abs(temporal[j, k] - sum(h[i, j, k] for i in range(t)) / t) < 1e-6
        for i in range(t):
            for k in range(d2):
                assert abs(spatial[i, k] - sum(h[i, j, k] for j in range(s)) / s) < 1e-6

        feats = build_spatiotemporal(h)
        assert feats.combined.shape == (s + t, d2)
        np.testing.assert_allclose(feats.combined[:s], temporal, atol=1e-12)
        np.testing.assert_allclose(feats.combined[s:], spatial, atol=1e-12)

        # permutation invariance
        np.testing.assert_allclose(pool_temporal(h[rng.permutation(t)]), temporal, atol=1e-9)
        np.testing.assert_allclose(pool_spatial(h[:, rng.permutation(s), :]), spatial, atol=1e-9)

        # linearity
        g = rng.normal(size=(t, s, d2))
        a, b = float(rng.normal()), float(rng.normal())
        np.testing.assert_allclose(
            pool_temporal(a * h + b * g), a * pool_temporal(h) + b * pool_temporal(g), atol=1e-6)

        # projection row-by-row oracle (dense matrix-vector loop)
        proj = VisualProjection(d2, e, seed=case)
        tokens = project_features(feats, proj).tokens.detach().numpy()
        w = proj.linear.weight.detach().numpy()
        bias = proj.linear.bias.detach().numpy()
        combined = feats.combined
        for r in range(s + t):
            expected = bias + w @ combined[r]
            np.testing.assert_allclose(tokens[r], expected, atol=1e-6)
    assert time.monotonic() - start < 10.0


# --- criterion 2 -------------------------------------------------------------

@pytest.mark.acceptance(2, "prompt golden fixtures are bit-exact; answer mask covers exactly the answer")
def test_criterion_2_prompt_goldens():
    from test_prompt import GOLDEN_PREFIXES, TOK, visual
    from refvlm.model.prompt import assemble_prompt, render_prompt_prefix

    start = time.monotonic()
    assert len(GOLDEN_PREFIXES) == 10
    assert {f for _, f, _, _ in GOLDEN_PREFIXES} == set(FoulType)
    assert {s for _, _, s, _ in GOLDEN_PREFIXES} == set(Severity)
    for question, foul, severity, expected in GOLDEN_PREFIXES:
        assert render_prompt_prefix(question, foul, severity) == expected
        prompt = assemble_prompt(question, foul, severity, visual(4), answer="No card.", tokenizer=TOK)
        assert [seg.kind for seg in prompt.segments] == ["text", "visual", "text", "text"]
        assert prompt.segments[0].payload == TOK.encode(expected)
        assert prompt.segments[2].payload == TOK.encode(" Assistant:")
        n_answer = len(TOK.encode("No card.")) + 1
        assert sum(prompt.answer_mask) == n_answer
        assert all(prompt.answer_mask[-n_answer:])
        assert not any(prompt.answer_mask[:-n_answer])
    assert time.monotonic() - start < 1.0


# --- criterion 3 -------------------------------------------------------------

@pytest.fixture(scope="session")
def stage1_instrumented(tmp_path_factory):
    """Library-level stage-1 run with per-step logit capture, same config as the CLI chain."""
    root = tmp_path_factory.mktemp("stage1_hooked")
    run_cli(["make-synthetic", "--out", str(root / "data"), "--clips", "256", "--frames", "8",
             "--size", "16", "--seed", "0"])
    clips, _ = load_dataset(root / "data" / "manifest.csv")
    train = labeled_clips(clips, root / "data", frames_per_clip=8, split="train")
    test = labeled_clips(clips, root / "data", frames_per_clip=8, split="test")
    captured = []

    def hook(step, foul_logits, sev_logits, foul_t, sev_t, loss):
        captured.append((foul_logits.numpy(), sev_logits.numpy(),
                         foul_t.numpy(), sev_t.numpy(), loss))

    cfg = Stage1Config(learning_rate=3e-3, epochs=30, batch_size=32, frames_per_clip=8, seed=0)
    start = time.monotonic()
    manifest, history = train_stage1(train, cfg, ArchConfig(), root / "ckpt", step_hook=hook)
    elapsed = time.monotonic() - start
    return SimpleNamespace(manifest=manifest, history=history, captured=captured,
                           train=train, test=test, elapsed=elapsed)


@pytest.mark.acceptance(3, "stage-1 toy training: held-out accuracy >= 0.90 on both heads in < 5 min")
def test_criterion_3_stage1_accuracy(stage1_instrumented):
    from refvlm.training.checkpoint import load_stage1_handles
    from refvlm.training.stage1 import predict_labels

    assert stage1_instrumented.elapsed < 300.0
    encoder, heads = load_stage1_handles(stage1_instrumented.manifest)
    test = stage1_instrumented.test
    bundles = predict_labels(encoder, heads, [ex.clip for ex in test])
    foul_acc = np.mean([b.predicted_foul == ex.foul for b, ex in zip(bundles, test)])
    sev_acc = np.mean([b.predicted_severity == ex.severity for b, ex in zip(bundles, test)])
    assert foul_acc >= 0.90, f"held-out foul accuracy {foul_acc:.3f}"
    assert sev_acc >= 0.90, f"held-out severity accuracy {sev_acc:.3f}"


@pytest.mark.acceptance(3, "stage-1 logged loss equals the sum of per-task CE oracles at every step")
def test_criterion_3_loss_oracle(stage1_instrumented):
    def ce(logits, target):
        m = max(logits)
        exps = [np.exp(v - m) for v in logits]
        return -np.log(exps[target] / sum(exps))

    assert len(stage1_instrumented.captured) == len(stage1_instrumented.history)
    for foul_logits, sev_logits, foul_t, sev_t, loss in stage1_instrumented.captured:
        n = foul_logits.shape[0]
        expected = 0.0
        for i in range(n):
            expected += ce(list(foul_logits[i]), int(foul_t[i])) / n
            expected += ce(list(sev_logits[i]), int(sev_t[i])) / n
        assert abs(loss - expected) < 1e-6


# --- criterion 4 -------------------------------------------------------------

@pytest.mark.acceptance(4, "stage-2 freeze: frozen digests byte-identical; layer budget; zero-init adapters")
def test_criterion_4_freeze_and_budget(stage1_instrumented, tmp_path):
    import torch
    from refvlm.model.adapters import attach_adapters, select_trainable_parameters

    # layer budget formula at the published fraction on the default 4-layer LM
    lm = build_lm(ArchConfig(), seed=0)
    spec = select_trainable_parameters(lm, fraction=0.01, rank=4)
    assert spec.layer_count == 1  # ceil(0.01 * 4)
    assert select_trainable_parameters(lm, 1.0, 4).layer_count == 4
    assert select_trainable_parameters(lm, 0.5, 4).layer_count == 2

    # zero-initialized adapters leave the base LM's logits unchanged
    embeds = torch.randn(6, lm.embed_dim, dtype=torch.float64,
                         generator=torch.Generator().manual_seed(0))
    with torch.no_grad():
        before = lm(embeds).clone()
    attach_adapters(lm, spec, seed=1)
    with torch.no_grad():
        after = lm(embeds)
    assert float((before - after).abs().max()) < 1e-6

    # a real stage-2 run at the published 1% fraction: digests frozen, budget held
    clips = stage1_instrumented.train[:16]
    from refvlm.training.stage2 import Stage2Example

    dataset = [
        Stage2Example(clip=lc.clip, question="What card would you give? Why?",
                      answer="Foul, but no card.", gt_foul=lc.foul, gt_severity=lc.severity)
        for lc in clips
    ]
    cfg = Stage2Config(learning_rate=1e-3, epochs=1, batch_size=8,
                       trainable_fraction=0.01, adapter_rank=4, seed=0)
    manifest, report, _ = train_stage2(dataset, stage1_instrumented.manifest, cfg, tmp_path / "s2")
    assert report.digests_before == report.digests_after
    assert report.adapter_layer_count == 1
    assert report.fraction <= 0.01, f"trainable fraction {report.fraction:.4f} exceeds the 1% budget"
    assert report.adapter_parameter_count > 0


# --- criterion 5 -------------------------------------------------------------

@pytest.mark.acceptance(5, "GT labels injected in every training prompt; predictions injected at inference")
def test_criterion_5_injection_mechanism(stage1_instrumented, tmp_path):
    from refvlm.model.pipeline import InferencePipeline
    from refvlm.training.stage2 import Stage2Example

    train = stage1_instrumented.train[:12]
    dataset = [
        Stage2Example(clip=lc.clip, question="What card would you give? Why?",
                      answer="Foul, but no card.", gt_foul=lc.foul, gt_severity=lc.severity)
        for lc in train
    ]
    gt_by_clip = {lc.clip.clip_id: (lc.foul, lc.severity) for lc in train}
    seen_training_prompts = []

    def train_hook(prompt, clip_id):
        text = bytes(prompt.segments[0].payload).decode("utf-8")
        foul, severity = gt_by_clip[clip_id]
        assert foul.display in text, f"GT foul label missing from training prompt: {text!r}"
        assert severity.display in text
        seen_training_prompts.append(clip_id)

    cfg = Stage2Config(learning_rate=2e-3, epochs=2, batch_size=4,
                       trainable_fraction=0.5, adapter_rank=4, seed=0, base_warmup_steps=20)
    manifest, _, _ = train_stage2(dataset, stage1_instrumented.manifest, cfg,
                                  tmp_path / "s2", prompt_hook=train_hook)
    assert len(seen_training_prompts) == len(dataset) * cfg.epochs  # every sample of every batch

    encoder, heads, projection, lm = load_stage2_handles(manifest)
    pipeline = InferencePipeline(encoder, heads, projection, lm)
    captured = []

    def infer_hook(prompt, clip_id):
        captured.append(bytes(prompt.segments[0].payload).decode("utf-8"))

    result = pipeline.infer(train[0].clip, "What card would you give? Why?",
                            max_new_tokens=4, prompt_hook=infer_hook)
    assert len(captured) == 1
    assert result.predicted_foul.display in captured[0]
    assert result.predicted_severity.display in captured[0]


# --- criterion 6 -------------------------------------------------------------

@pytest.mark.acceptance(6, "toy end-to-end: extracted-severity accuracy >= 0.80 held-out; agreement reported")
def test_criterion_6_end_to_end(pipeline_run):
    assert pipeline_run.elapsed < 900.0, f"end-to-end chain took {pipeline_run.elapsed:.0f}s"
    metrics = report_metrics(pipeline_run.gen)
    accuracy_value = float(metrics["metrics.severity_accuracy"])
    assert accuracy_value >= 0.80, f"extracted-severity accuracy {accuracy_value}"
    assert int(metrics["metrics.n_evaluated"]) > 0

    agreement = report_metrics(pipeline_run.agreement)
    rate = float(agreement["metrics.agreement_rate"])
    assert 0.0 <= rate <= 1.0
    assert int(agreement["metrics.n_extracted"]) > 0
    assert (pipeline_run.agreement / "agreement.txt").exists()


# --- criterion 7 -------------------------------------------------------------

@pytest.mark.acceptance(7, "accuracy/balanced accuracy match brute-force oracles on 500 random matrices")
def test_criterion_7_metric_oracles():
    rng = np.random.default_rng(7)
    checked_empty_rows = 0
    for case in range(500):
        k = int(rng.integers(2, 7))
        counts = rng.integers(0, 12, size=(k, k))
        if rng.random() < 0.3:
            counts[rng.integers(0, k)] = 0  # force an empty ground-truth row
        if counts.sum() == 0:
            counts[0, 0] = 1
        cm = ConfusionMatrix(tuple(f"k{i}" for i in range(k)), counts)

        correct = 0
        total = 0
        for i in range(k):
            for j in range(k):
                total += counts[i][j]
                if i == j:
                    correct += counts[i][j]
        assert accuracy(cm) == correct / total

        recalls = []
        for i in range(k):
            row = sum(counts[i])
            if row == 0:
                continue
            recalls.append(counts[i][i] / row)
        if any(sum(counts[i]) == 0 for i in range(k)):
            checked_empty_rows += 1
        assert balanced_accuracy(cm) == pytest.approx(sum(recalls) / len(recalls), abs=0)
    assert checked_empty_rows > 50


TABLE4_FIXTURE = """\
                                  Type of Foul    Offence Severity
Feat. extr.         Pooling       Acc.    BA.     Acc.    BA.
Encoder heads       Single-view   0.51    0.39    0.52    0.35
Generated text      Single-view   /       /       0.62    0.35
"""


@pytest.mark.acceptance(7, "classification table renders the reference-layout fixture verbatim")
def test_criterion_7_table_golden():
    rows = [
        ClassificationRow("Encoder heads", "Single-view", 0.51, 0.39, 0.52, 0.35),
        ClassificationRow("Generated text", "Single-view", None, None, 0.62, 0.35),
    ]
    assert format_classification_table(rows) == TABLE4_FIXTURE


# --- criterion 8 -------------------------------------------------------------

@pytest.mark.acceptance(8, "curated extraction corpus: 100% rule accuracy, zero false matches")
def test_criterion_8_extraction_corpus():
    assert len(CURATED) >= 30
    for text, expected in CURATED:
        result = extract_labels(text)
        assert result.severity is expected, f"{text!r} -> {result.severity} != {expected}"
    assert len(NO_EVIDENCE) == 10
    for text in NO_EVIDENCE:
        result = extract_labels(text)
        assert result.severity is None, f"false match on {text!r}: {result.severity}"


# --- criterion 9 -------------------------------------------------------------

TABLE5_FIXTURE = """\
            Mean    1     2     3     4     5
Referees    4.0     3%    10%   8%    46%   33%
Model       3.8     3%    17%   4%    46%   30%
"""


@pytest.mark.acceptance(9, "study engine: 20x20 simulation matches counting oracle; no source leakage")
def test_criterion_9_study_engine():
    import json
    import random

    items = []
    for i in range(60):
        items.append(StudyItem(f"clip{i}", f"human explanation {i}", "human"))
        items.append(StudyItem(f"clip{i}", f"model explanation {i}", "model"))
    raters = [f"rater{i:02d}" for i in range(20)]
    sessions = create_study(items, raters, items_per_rater=20, seed=99)
    assert len(sessions) == 20
    for s in sessions:
        assert len(s.items) == 20
        assert len({it.clip_id for it in s.items}) == 20

    score_rng = random.Random(123)
    records = []
    expected = {"human": [], "model": []}
    for s in sessions:
        for idx, item in enumerate(s.items):
            score = score_rng.randint(1, 5)
            records.append(make_rating(s.rater_id, idx, score))
            expected[item.source].append(score)
    report = study_summary(records, sessions)
    for src in ("human", "model"):
        vals = expected[src]
        summary = report.per_source[src]
        assert summary.n_ratings == len(vals)
        assert summary.mean == sum(vals) / len(vals)
        counts = tuple(sum(1 for v in vals if v == k) for k in (1, 2, 3, 4, 5))
        assert summary.distribution_counts == counts
        assert summary.distribution_pct == tuple(int(round(100 * c / len(vals))) for c in counts)

    # blindness: every rater-facing serialization is free of source information
    for s in sessions:
        payload = json.dumps(s.rater_view())
        assert "source" not in payload
        assert '"human"' not in payload
        assert '"model"' not in payload


@pytest.mark.acceptance(9, "study table renders the reference-layout fixture verbatim")
def test_criterion_9_table_golden():
    rows = [
        StudyRow("Referees", 4.0, (3, 10, 8, 46, 33)),
        StudyRow("Model", 3.8, (3, 17, 4, 46, 30)),
    ]
    assert format_study_table(rows) == TABLE5_FIXTURE


# --- criterion 10 ------------------------------------------------------------

@pytest.mark.acceptance(10, "re-running both stages and eval with identical seeds reproduces digests and reports")
def test_criterion_10_determinism(pipeline_run, tmp_path_factory):
    rerun = run_chain(tmp_path_factory.mktemp("acceptance_rerun"))

    first_s1 = CheckpointManifest.load(pipeline_run.stage1)
    second_s1 = CheckpointManifest.load(rerun.stage1)
    assert first_s1.digests == second_s1.digests

    first_s2 = CheckpointManifest.load(pipeline_run.stage2)
    second_s2 = CheckpointManifest.load(rerun.stage2)
    assert first_s2.digests == second_s2.digests

    def normalized(chain, path):
        text = (path / "run_report.txt").read_text()
        return text.replace(str(chain.root), "<RUN>")

    for sub in ("stage1", "stage2", "gen", "agreement"):
        assert normalized(pipeline_run, getattr(pipeline_run, sub)) == \
            normalized(rerun, getattr(rerun, sub)), f"{sub} reports differ"

    # generated records are identical as well
    first_records = (pipeline_run.gen / "records.csv").read_text()
    second_records = (rerun.gen / "records.csv").read_text()
    assert first_records == second_records
