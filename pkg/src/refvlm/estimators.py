"""Scikit-learn style facades over the two trainable components.

`FoulSeverityClassifier` wraps the multi-task encoder fine-tune (fit on
clips, predict label-index pairs); `ExplanationGenerator` wraps the
frozen-encoder alignment stage (fit on question/answer examples with
ground-truth labels injected, generate with classifier predictions
injected). Both expose get_params/set_params and clone cleanly, so they
compose with pipelines and search utilities from the wider ecosystem.
"""

from __future__ import annotations

import tempfile
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .labels import FoulType, Severity
from .model.pipeline import InferencePipeline
from .model.types import VideoClip
from .training.config import ArchConfig, Stage1Config, Stage2Config
from .training.checkpoint import load_stage1_handles, load_stage2_handles
from .training.stage1 import LabeledClip, train_stage1
from .training.stage2 import Stage2Example, train_stage2


def _as_clip(x, i: int) -> VideoClip:
    if isinstance(x, VideoClip):
        return x
    return VideoClip(frames=np.asarray(x), clip_id=f"sample_{i}", foul_frame_index=0)


class FoulSeverityClassifier(BaseEstimator):
    """Multi-task video classifier with a fit/predict surface.

    X is a sequence of VideoClip objects or T x H x W x 3 arrays; y is an
    (n, 2) array of integer labels (foul-type index, severity index).
    """

    def __init__(
        self,
        learning_rate: float = 1e-3,
        epochs: int = 10,
        batch_size: int = 16,
        seed: int = 0,
        patch_size: int = 4,
        hidden_dim: int = 32,
        feature_dim: int = 32,
        depth: int = 2,
        checkpoint_dir: Optional[str] = None,
    ):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.patch_size = patch_size
        self.hidden_dim = hidden_dim
        self.feature_dim = feature_dim
        self.depth = depth
        self.checkpoint_dir = checkpoint_dir

    def _arch(self) -> ArchConfig:
        return ArchConfig(
            patch_size=self.patch_size,
            encoder_hidden_dim=self.hidden_dim,
            encoder_feature_dim=self.feature_dim,
            encoder_depth=self.depth,
        )

    def fit(self, X: Sequence, y) -> "FoulSeverityClassifier":
        y = np.asarray(y)
        if y.ndim != 2 or y.shape[1] != 2:
            raise ValueError(f"y must be (n, 2) label-index pairs, got shape {y.shape}")
        if len(X) != y.shape[0]:
            raise ValueError(f"X has {len(X)} samples but y has {y.shape[0]}")
        dataset = [
            LabeledClip(clip=_as_clip(x, i), foul=FoulType(int(y[i, 0])), severity=Severity(int(y[i, 1])))
            for i, x in enumerate(X)
        ]
        cfg = Stage1Config(
            learning_rate=self.learning_rate, epochs=self.epochs,
            batch_size=self.batch_size, frames_per_clip=max(2, dataset[0].clip.n_frames),
            seed=self.seed,
        )
        out_dir = Path(self.checkpoint_dir) if self.checkpoint_dir else Path(tempfile.mkdtemp(prefix="stage1_"))
        manifest, history = train_stage1(dataset, cfg, arch=self._arch(), out_dir=out_dir)
        self.manifest_ = manifest
        self.history_ = history
        self.encoder_, self.heads_ = load_stage1_handles(manifest)
        return self

    def _check_fitted(self):
        if not hasattr(self, "encoder_"):
            raise NotFittedError("fit the classifier before predicting")

    def predict_proba(self, X: Sequence) -> Tuple[np.ndarray, np.ndarray]:
        """Softmax probabilities per task: (n, 8) and (n, 4)."""
        self._check_fitted()
        from .training.stage1 import predict_labels

        bundles = predict_labels(self.encoder_, self.heads_, [_as_clip(x, i) for i, x in enumerate(X)])
        foul = np.stack([_softmax(b.foul_logits) for b in bundles])
        sev = np.stack([_softmax(b.severity_logits) for b in bundles])
        return foul, sev

    def predict(self, X: Sequence) -> np.ndarray:
        self._check_fitted()
        from .training.stage1 import predict_labels

        bundles = predict_labels(self.encoder_, self.heads_, [_as_clip(x, i) for i, x in enumerate(X)])
        return np.array([[int(b.predicted_foul), int(b.predicted_severity)] for b in bundles])

    def score(self, X: Sequence, y) -> float:
        """Mean of the two tasks' accuracies."""
        y = np.asarray(y)
        pred = self.predict(X)
        foul_acc = float((pred[:, 0] == y[:, 0]).mean())
        sev_acc = float((pred[:, 1] == y[:, 1]).mean())
        return (foul_acc + sev_acc) / 2.0


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


class ExplanationGenerator(BaseEstimator):
    """Prediction-conditioned explanation model with a fit/generate surface.

    Requires a fitted FoulSeverityClassifier (its checkpoint supplies the
    frozen encoder and heads). X is a sequence of (clip, question) pairs; fit
    additionally needs ground-truth (foul, severity) per sample and the
    answer strings as y.
    """

    def __init__(
        self,
        classifier: Optional[FoulSeverityClassifier] = None,
        learning_rate: float = 2e-3,
        epochs: int = 20,
        batch_size: int = 8,
        trainable_fraction: float = 0.5,
        adapter_rank: int = 8,
        base_warmup_steps: int = 0,
        seed: int = 0,
        checkpoint_dir: Optional[str] = None,
    ):
        self.classifier = classifier
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.trainable_fraction = trainable_fraction
        self.adapter_rank = adapter_rank
        self.base_warmup_steps = base_warmup_steps
        self.seed = seed
        self.checkpoint_dir = checkpoint_dir

    def fit(self, X: Sequence[Tuple], y: Sequence[str], labels: Optional[Sequence[Tuple]] = None) -> "ExplanationGenerator":
        if self.classifier is None or not hasattr(self.classifier, "manifest_"):
            raise NotFittedError("ExplanationGenerator requires a fitted FoulSeverityClassifier")
        if labels is None:
            raise ValueError("labels=(foul, severity) per sample are required for training")
        if not (len(X) == len(y) == len(labels)):
            raise ValueError("X, y, and labels must have equal lengths")
        dataset = []
        for i, ((clip, question), answer, (foul, severity)) in enumerate(zip(X, y, labels)):
            dataset.append(Stage2Example(
                clip=_as_clip(clip, i), question=question, answer=answer,
                gt_foul=FoulType(int(foul)), gt_severity=Severity(int(severity)),
            ))
        cfg = Stage2Config(
            learning_rate=self.learning_rate, epochs=self.epochs, batch_size=self.batch_size,
            trainable_fraction=self.trainable_fraction, adapter_rank=self.adapter_rank,
            base_warmup_steps=self.base_warmup_steps, seed=self.seed,
        )
        out_dir = Path(self.checkpoint_dir) if self.checkpoint_dir else Path(tempfile.mkdtemp(prefix="stage2_"))
        manifest, report, history = train_stage2(dataset, self.classifier.manifest_, cfg, out_dir=out_dir)
        self.manifest_ = manifest
        self.freeze_report_ = report
        self.history_ = history
        encoder, heads, projection, lm = load_stage2_handles(manifest)
        self.pipeline_ = InferencePipeline(encoder, heads, projection, lm)
        return self

    def generate(self, X: Sequence[Tuple], max_new_tokens: int = 64) -> List[str]:
        if not hasattr(self, "pipeline_"):
            raise NotFittedError("fit the generator before generating")
        answers = []
        for i, (clip, question) in enumerate(X):
            answers.append(self.pipeline_.infer(_as_clip(clip, i), question, max_new_tokens=max_new_tokens).answer)
        return answers

    predict = generate
