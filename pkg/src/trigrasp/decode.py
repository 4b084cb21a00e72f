"""Turning prediction maps into grasps.

A prediction map stack holds, per pixel, a 2-way graspable/not-graspable
confidence, k angle-bin scores, and a normalized width.  Decoding picks
pixels by confidence, the angle by argmax over bins, and the opening by
unscaling the width plane.  Ties always resolve to the first pixel (or
bin) in row-major order, so decoding is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .dataset import LabelMaps
from .gmap import GmapHeader, KIND_PREDICTION, read_gmap, write_gmap
from .grasp import (
    DEFAULT_BASE,
    AngleCodec,
    TriangleGrasp,
    decode_angle,
    unscale_width,
)

DEFAULT_THRESHOLD = 0.5
DEFAULT_PEAK_RADIUS = 10


@dataclass
class PredictionMaps:
    """Per-pixel predictions: channel 0 of conf is not-graspable, 1 graspable."""

    conf: np.ndarray   # (2, H, W)
    angle: np.ndarray  # (k, H, W)
    width: np.ndarray  # (H, W)
    codec: AngleCodec

    def __post_init__(self):
        if self.conf.ndim != 3 or self.conf.shape[0] != 2:
            raise ValueError(f"conf must be (2, H, W), got {self.conf.shape}")
        h, w = self.conf.shape[1:]
        if self.angle.shape != (self.codec.k, h, w) or self.width.shape != (h, w):
            raise ValueError("prediction map shapes are inconsistent")
        for name, arr in (("conf", self.conf), ("angle", self.angle),
                          ("width", self.width)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} plane contains non-finite values")

    @property
    def image_size(self) -> tuple[int, int]:
        return self.conf.shape[1:]

    @property
    def graspable(self) -> np.ndarray:
        return self.conf[1]

    def confidence_sum_error(self) -> float:
        """Largest per-pixel deviation of conf channel sums from 1."""
        return float(np.abs(self.conf[0] + self.conf[1] - 1.0).max())

    def to_array(self) -> np.ndarray:
        return np.concatenate(
            [self.conf, self.angle, self.width[None]], axis=0
        ).astype(np.float32)


def prediction_maps_from_array(data: np.ndarray, codec: AngleCodec) -> PredictionMaps:
    k = codec.k
    if data.shape[0] != k + 3:
        raise ValueError(f"expected {k + 3} channels, got {data.shape[0]}")
    return PredictionMaps(
        conf=data[0:2].astype(np.float32),
        angle=data[2:2 + k].astype(np.float32),
        width=data[2 + k].astype(np.float32),
        codec=codec,
    )


def write_prediction_gmap(path, maps: PredictionMaps) -> None:
    h, w = maps.image_size
    header = GmapHeader(kind=KIND_PREDICTION, k=maps.codec.k, height=h, width=w)
    write_gmap(path, header, maps.to_array())


def read_prediction_gmap(path) -> PredictionMaps:
    header, data = read_gmap(path)
    if header.kind != KIND_PREDICTION:
        raise ValueError(f"{path}: expected a prediction GMAP, got {header.kind}")
    return prediction_maps_from_array(data, AngleCodec(header.k))


def prediction_from_label(maps: LabelMaps) -> PredictionMaps:
    """Ideal predictions for a label: the self-consistency reference."""
    conf = np.stack([1.0 - maps.confidence, maps.confidence]).astype(np.float32)
    return PredictionMaps(conf=conf, angle=maps.angle.copy(),
                          width=maps.width.copy(), codec=maps.codec)


@dataclass(frozen=True)
class ScoredGrasp:
    grasp: TriangleGrasp
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


def _decode_at(p: PredictionMaps, row: int, col: int, d: float) -> ScoredGrasp:
    bin_index = int(np.argmax(p.angle[:, row, col]))
    return ScoredGrasp(
        grasp=TriangleGrasp(
            x=float(col),
            y=float(row),
            omega=unscale_width(float(p.width[row, col])),
            theta=decode_angle(bin_index, p.codec),
            d=d,
        ),
        score=float(p.graspable[row, col]),
    )


def best_grasp(
    p: PredictionMaps,
    threshold: float = DEFAULT_THRESHOLD,
    d: float = DEFAULT_BASE,
) -> ScoredGrasp | None:
    """Highest-confidence grasp above threshold, or None when nothing passes.

    A None return means the caller should re-acquire the scene (new
    viewpoint) and decode again.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    g = p.graspable
    mask = g > threshold
    if not mask.any():
        return None
    flat = int(np.argmax(np.where(mask, g, -np.inf)))
    row, col = divmod(flat, g.shape[1])
    return _decode_at(p, row, col, d)


def multi_grasps(
    p: PredictionMaps,
    threshold: float = DEFAULT_THRESHOLD,
    radius: int = DEFAULT_PEAK_RADIUS,
    d: float = DEFAULT_BASE,
) -> list[ScoredGrasp]:
    """All local confidence peaks above threshold, best first.

    A pixel is a peak when no pixel within the Chebyshev radius has a
    strictly greater score, and no equal-scored pixel within the radius
    precedes it in row-major order (so a compact plateau yields exactly
    one peak).  Suppression considers all pixels, not just candidates,
    which keeps the peak count monotone in both threshold and radius.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    g = p.graspable
    h, w = g.shape
    size = 2 * radius + 1
    window_max = ndimage.maximum_filter(g, size=size, mode="constant", cval=-np.inf)
    rows, cols = np.nonzero((g > threshold) & (g == window_max))
    peaks: list[tuple[int, int]] = []
    for row, col in zip(rows.tolist(), cols.tolist()):
        r0, r1 = max(0, row - radius), min(h, row + radius + 1)
        c0, c1 = max(0, col - radius), min(w, col + radius + 1)
        eq_r, eq_c = np.nonzero(g[r0:r1, c0:c1] == g[row, col])
        first = int(eq_r[0]) + r0, int(eq_c[0]) + c0
        if first == (row, col):
            peaks.append((row, col))
    scored = [_decode_at(p, row, col, d) for row, col in peaks]
    scored.sort(key=lambda sg: -sg.score)
    return scored
