"""Scikit-learn facade: params round-trip, clone, fit/predict surfaces."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from refvlm.estimators import ExplanationGenerator, FoulSeverityClassifier
from refvlm.labels import FoulType, Severity
from refvlm.model.types import VideoClip


def pattern_clip(foul, severity, seed):
    rng = np.random.default_rng(seed)
    frames = rng.uniform(0.05, 0.2, size=(2, 16, 16, 3))
    frames[:, :8, 2 * int(foul) : 2 * int(foul) + 2, :] = 0.95
    frames[:, 8:, 4 * int(severity) : 4 * int(severity) + 4, :] = 0.85
    return VideoClip(frames=frames, clip_id=f"e{seed}", foul_frame_index=0)


@pytest.fixture(scope="module")
def tiny_problem():
    X, y = [], []
    i = 0
    for f in FoulType:
        s = Severity(int(f) % 4)
        for _ in range(2):
            X.append(pattern_clip(f, s, i))
            y.append([int(f), int(s)])
            i += 1
    return X, np.asarray(y)


def test_get_set_params_round_trip():
    clf = FoulSeverityClassifier(epochs=3, seed=5)
    params = clf.get_params()
    assert params["epochs"] == 3
    assert params["seed"] == 5
    clf.set_params(epochs=7)
    assert clf.epochs == 7
    cloned = clone(clf)
    assert cloned.get_params()["epochs"] == 7


def test_predict_before_fit_raises():
    clf = FoulSeverityClassifier()
    with pytest.raises(NotFittedError):
        clf.predict([np.zeros((2, 16, 16, 3))])


def test_fit_predict_score(tiny_problem, tmp_path):
    X, y = tiny_problem
    clf = FoulSeverityClassifier(
        learning_rate=5e-3, epochs=300, batch_size=16, seed=0,
        hidden_dim=16, feature_dim=16, depth=1, checkpoint_dir=str(tmp_path / "clf"),
    )
    clf.fit(X, y)
    pred = clf.predict(X)
    assert pred.shape == (len(X), 2)
    assert clf.score(X, y) == 1.0
    foul_proba, sev_proba = clf.predict_proba(X)
    assert foul_proba.shape == (len(X), 8)
    np.testing.assert_allclose(foul_proba.sum(axis=1), 1.0, atol=1e-9)
    assert (np.argmax(foul_proba, axis=1) == pred[:, 0]).all()


def test_fit_validates_shapes(tiny_problem):
    X, y = tiny_problem
    clf = FoulSeverityClassifier(epochs=1)
    with pytest.raises(ValueError):
        clf.fit(X, y[:, :1])
    with pytest.raises(ValueError):
        clf.fit(X[:3], y)


def test_generator_requires_fitted_classifier():
    gen = ExplanationGenerator(classifier=FoulSeverityClassifier())
    with pytest.raises(NotFittedError):
        gen.fit([], [], labels=[])


def test_generator_fit_and_generate(tiny_problem, tmp_path):
    X, y = tiny_problem
    clf = FoulSeverityClassifier(
        learning_rate=5e-3, epochs=300, batch_size=16, seed=0,
        hidden_dim=16, feature_dim=16, depth=1, checkpoint_dir=str(tmp_path / "clf"),
    )
    clf.fit(X, y)
    answers = {0: "No foul.", 1: "Foul, but no card.", 2: "Foul, yellow card.", 3: "Foul, red card."}
    pairs = [(clip, "What card would you give? Why?") for clip in X]
    texts = [answers[int(sev)] for _, sev in y]
    gen = ExplanationGenerator(
        classifier=clf, learning_rate=5e-3, epochs=30, batch_size=8,
        trainable_fraction=0.5, adapter_rank=8, base_warmup_steps=300, seed=0,
        checkpoint_dir=str(tmp_path / "gen"),
    )
    gen.fit(pairs, texts, labels=[tuple(row) for row in y])
    assert gen.freeze_report_.digests_before == gen.freeze_report_.digests_after
    outputs = gen.generate(pairs[:4], max_new_tokens=32)
    assert len(outputs) == 4
    assert all(isinstance(o, str) for o in outputs)
    assert any(o.strip() for o in outputs)
