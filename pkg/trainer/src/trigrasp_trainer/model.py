"""Small fully-convolutional grasp predictor.

A strided encoder produces F feature maps at quarter resolution (the
full-scale design uses a large segmentation backbone; this desk-scale
stand-in keeps the contract).  Three heads share those features; each is
two 3x3 convolutions followed by 4x bilinear upsampling, producing
per-pixel outputs at the input resolution: 2 confidence channels, k
angle-bin channels, and 1 width channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class PredictorSpec:
    k: int
    features: int = 96
    head_channels: int = 32

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


class _Head(nn.Module):
    def __init__(self, features: int, hidden: int, out_channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(features, hidden, 3, padding=1)
        self.conv2 = nn.Conv2d(hidden, out_channels, 3, padding=1)
        self.up = nn.Upsample(scale_factor=4, mode="bilinear", align_corners=False)

    def forward(self, x):
        x = torch.relu(self.conv1(x))
        return self.up(self.conv2(x))


class GraspPredictor(nn.Module):
    """Input (B, 3, H, W) with H, W divisible by 4; outputs logits."""

    def __init__(self, spec: PredictorSpec):
        super().__init__()
        self.spec = spec
        f = spec.features
        self.encoder = nn.Sequential(
            nn.Conv2d(3, 32, 3, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(64, f, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(f, f, 3, padding=2, dilation=2), nn.ReLU(inplace=True),
        )
        self.conf_head = _Head(f, spec.head_channels, 2)
        self.angle_head = _Head(f, spec.head_channels, spec.k)
        self.width_head = _Head(f, spec.head_channels, 1)

    def forward(self, x) -> dict[str, torch.Tensor]:
        if x.shape[-1] % 4 or x.shape[-2] % 4:
            raise ValueError(f"input size {tuple(x.shape[-2:])} not divisible by 4")
        feats = self.encoder(x)
        return {
            "conf": self.conf_head(feats),
            "angle": self.angle_head(feats),
            "width": self.width_head(feats).squeeze(1),
        }
