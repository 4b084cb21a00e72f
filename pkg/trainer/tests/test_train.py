"""Training-loop behavior plus the trainer acceptance run.

The overfit test is the secondary acceptance criterion: train on the
8-image synthetic corpus and reach 100% training-set accuracy under the
toolkit's evaluation harness within 300 epochs.
"""

import json

import pytest
import torch

from trigrasp_trainer.data import load_corpus
from trigrasp_trainer.train import FULL_SCALE_PRESET, TrainConfig, smoothed, train

from conftest import requires_toolkit, run_toolkit


@requires_toolkit
def test_corpus_loads(corpus):
    k, samples = load_corpus(corpus / "data" / "images", corpus / "labels")
    assert k == 36 and len(samples) == 8
    assert samples[0].image.shape == (3, 96, 96)
    assert samples[0].angle.shape == (36, 96, 96)


@requires_toolkit
def test_one_epoch_deterministic(corpus, tmp_path):
    k, samples = load_corpus(corpus / "data" / "images", corpus / "labels")
    config = TrainConfig(epochs=1, seed=3, features=24)
    r1 = train(config, k, samples, tmp_path / "a")
    r2 = train(config, k, samples, tmp_path / "b")
    assert r1.loss_curve == r2.loss_curve
    assert r1.component_curves == r2.component_curves


@requires_toolkit
def test_emitted_gmaps_validate(corpus, tmp_path):
    k, samples = load_corpus(corpus / "data" / "images", corpus / "labels")
    result = train(TrainConfig(epochs=2, seed=0, features=24), k, samples,
                   tmp_path / "run")
    assert len(result.predictions) == 8
    for path in result.predictions:
        report = json.loads(run_toolkit("validate", str(path)).stdout)
        assert report["valid"], report
        assert report["max_confidence_sum_error"] <= 1e-4


def test_nan_loss_aborts_with_diagnostics(tmp_path):
    from trigrasp_trainer.data import Sample
    bad = Sample(
        image_id="bad",
        image=torch.full((3, 8, 8), float("nan")),
        confidence=torch.ones((8, 8)),
        angle=torch.ones((2, 8, 8)),
        width=torch.full((8, 8), 0.5),
    )
    with pytest.raises(RuntimeError, match="non-finite loss at epoch 0"):
        train(TrainConfig(epochs=1, features=8), 2, [bad], tmp_path)


def test_full_scale_preset_values():
    assert FULL_SCALE_PRESET.epochs == 1500
    assert FULL_SCALE_PRESET.batch == 12
    assert FULL_SCALE_PRESET.lr_milestones == (200, 500, 800, 1000)
    assert FULL_SCALE_PRESET.lr_gamma == 0.5


def test_smoothed_window():
    values = [5.0, 4.0, 3.0, 2.0, 1.0]
    assert smoothed(values, window=2) == [5.0, 4.5, 3.5, 2.5, 1.5]


@requires_toolkit
def test_overfit_reaches_full_training_accuracy(corpus, tmp_path):
    k, samples = load_corpus(corpus / "data" / "images", corpus / "labels")
    result = train(TrainConfig(epochs=300, seed=1), k, samples, tmp_path / "run")

    smooth = smoothed(result.loss_curve[:50], window=10)
    for earlier, later in zip(smooth, smooth[1:]):
        assert later <= earlier + 1e-9

    eval_out = run_toolkit(
        "eval", "--pred", str(tmp_path / "run" / "preds"),
        "--gt", str(corpus / "data" / "annotations.json"),
        "--out", str(tmp_path / "report.json"))
    assert "accuracy 100.0% (8/8)" in eval_out.stdout
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["accuracy"] == 1.0
