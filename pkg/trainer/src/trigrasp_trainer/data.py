"""Corpus loading: paired image PNGs and label GMAPs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .gmapio import read_label


@dataclass
class Sample:
    image_id: str
    image: torch.Tensor       # (3, H, W) float32 in [0, 1]
    confidence: torch.Tensor  # (H, W) float32
    angle: torch.Tensor       # (k, H, W) float32
    width: torch.Tensor       # (H, W) float32


def load_corpus(images_dir, labels_dir) -> tuple[int, list[Sample]]:
    """Pair images/<id>.png with labels/<id>.gmap; returns (k, samples)."""
    images_dir, labels_dir = Path(images_dir), Path(labels_dir)
    label_paths = sorted(labels_dir.glob("*.gmap"))
    if not label_paths:
        raise FileNotFoundError(f"no label GMAPs under {labels_dir}")
    samples = []
    k_seen = None
    for label_path in label_paths:
        image_id = label_path.stem
        image_path = images_dir / f"{image_id}.png"
        if not image_path.exists():
            raise FileNotFoundError(f"no image for label {image_id}")
        k, conf, angle, width = read_label(label_path)
        if k_seen is None:
            k_seen = k
        elif k != k_seen:
            raise ValueError(f"{label_path}: k={k} differs from {k_seen}")
        rgb = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.float32)
        samples.append(Sample(
            image_id=image_id,
            image=torch.from_numpy(rgb / 255.0).permute(2, 0, 1).contiguous(),
            confidence=torch.from_numpy(conf.copy()),
            angle=torch.from_numpy(angle.copy()),
            width=torch.from_numpy(width.copy()),
        ))
    return k_seen, samples
