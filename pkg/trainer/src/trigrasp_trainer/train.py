"""Training loop and prediction emission.

Deterministic on CPU for a fixed seed (single-threaded, seeded shuffling,
deterministic kernels).  Emitted predictions are post-activation: softmax
confidence (channels sum to 1), sigmoid angle scores, sigmoid width
clamped just below 1 so the stored plane stays in [0, 1).

The full-scale schedule from the reference setup is kept as a named
preset (1500 epochs, batch 12, lr halved at 200/500/800/1000); defaults
are desk-scale.
"""

from __future__ import annotations

import argparse
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from .data import Sample, load_corpus
from .gmapio import write_prediction
from .losses import grasp_loss
from .model import GraspPredictor, PredictorSpec

_WIDTH_CEIL = float(np.nextafter(np.float32(1.0), np.float32(0.0)))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch: int = 8
    lr: float = 7e-4
    lr_milestones: tuple[int, ...] = ()
    lr_gamma: float = 0.5
    seed: int = 0
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    mask_background: bool = True
    features: int = 96


FULL_SCALE_PRESET = TrainConfig(epochs=1500, batch=12,
                           lr_milestones=(200, 500, 800, 1000))


@dataclass
class TrainResult:
    loss_curve: list[float]
    component_curves: dict[str, list[float]]
    checkpoint: Path
    predictions: list[Path] = field(default_factory=list)


def _seed_everything(seed: int) -> torch.Generator:
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen


def train(
    config: TrainConfig,
    k: int,
    samples: list[Sample],
    out_dir,
    predict_ids: list[str] | None = None,
) -> TrainResult:
    """Fit the predictor and emit one prediction GMAP per requested image.

    ``predict_ids`` defaults to every corpus image (the overfit /
    self-test regime).  Aborts with diagnostics if the loss goes
    non-finite.
    """
    if not samples:
        raise ValueError("empty corpus")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gen = _seed_everything(config.seed)

    model = GraspPredictor(PredictorSpec(k=k, features=config.features))
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    scheduler = torch.optim.lr_scheduler.MultiStepLR(
        optimizer, milestones=list(config.lr_milestones), gamma=config.lr_gamma)

    images = torch.stack([s.image for s in samples])
    conf = torch.stack([s.confidence for s in samples])
    angle = torch.stack([s.angle for s in samples])
    width = torch.stack([s.width for s in samples])

    loss_curve: list[float] = []
    component_curves: dict[str, list[float]] = {
        "confidence": [], "angle": [], "width": []}
    n = len(samples)
    model.train()
    for epoch in range(config.epochs):
        order = torch.randperm(n, generator=gen)
        epoch_total = 0.0
        epoch_parts = {"confidence": 0.0, "angle": 0.0, "width": 0.0}
        batches = 0
        for start in range(0, n, config.batch):
            idx = order[start:start + config.batch]
            optimizer.zero_grad()
            outputs = model(images[idx])
            total, parts = grasp_loss(
                outputs, conf[idx], angle[idx], width[idx],
                weights=config.loss_weights,
                mask_background=config.mask_background,
            )
            if not torch.isfinite(total):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}: "
                    + ", ".join(f"{name}={val.item():g}"
                                for name, val in parts.items())
                )
            total.backward()
            optimizer.step()
            epoch_total += total.item()
            for name, val in parts.items():
                epoch_parts[name] += val.item()
            batches += 1
        scheduler.step()
        loss_curve.append(epoch_total / batches)
        for name in component_curves:
            component_curves[name].append(epoch_parts[name] / batches)

    checkpoint = out / "predictor.pt"
    torch.save({"state_dict": model.state_dict(), "k": k,
                "features": config.features}, checkpoint)
    (out / "loss_curve.json").write_text(
        json.dumps({"total": loss_curve, **component_curves}, indent=2) + "\n")

    wanted = set(predict_ids) if predict_ids is not None else None
    pred_dir = out / "preds"
    pred_dir.mkdir(exist_ok=True)
    predictions = []
    model.eval()
    with torch.no_grad():
        for sample in samples:
            if wanted is not None and sample.image_id not in wanted:
                continue
            path = pred_dir / f"{sample.image_id}.gmap"
            emit_prediction(model, sample.image, path)
            predictions.append(path)
    return TrainResult(loss_curve=loss_curve, component_curves=component_curves,
                       checkpoint=checkpoint, predictions=predictions)


def emit_prediction(model: GraspPredictor, image: torch.Tensor, path) -> None:
    """Forward one image and write the activated maps as a prediction GMAP."""
    outputs = model(image.unsqueeze(0))
    conf = torch.softmax(outputs["conf"][0], dim=0)
    angle = torch.sigmoid(outputs["angle"][0])
    width = torch.sigmoid(outputs["width"][0]).clamp(max=_WIDTH_CEIL)
    write_prediction(path, conf.numpy(), angle.numpy(), width.numpy())


def smoothed(values: list[float], window: int = 10) -> list[float]:
    """Trailing moving average, used by the loss-trend check."""
    out = []
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out.append(sum(values[lo:i + 1]) / (i + 1 - lo))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Train the desk-scale grasp predictor on a GMAP corpus")
    parser.add_argument("--images", required=True)
    parser.add_argument("--labels", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-mask", action="store_true",
                        help="include background pixels in angle/width terms")
    parser.add_argument("--full-scale-preset", action="store_true",
                        help="full-scale schedule (1500 epochs, batch 12)")
    args = parser.parse_args(argv)

    config = FULL_SCALE_PRESET if args.full_scale_preset else TrainConfig()
    overrides = {}
    for name in ("epochs", "batch", "lr", "seed"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.no_mask:
        overrides["mask_background"] = False
    config = replace(config, **overrides)

    k, samples = load_corpus(args.images, args.labels)
    result = train(config, k, samples, args.out)
    final = result.loss_curve[-1] if result.loss_curve else math.nan
    print(f"trained {config.epochs} epochs on {len(samples)} images "
          f"(final loss {final:.6f}); wrote {len(result.predictions)} predictions")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
