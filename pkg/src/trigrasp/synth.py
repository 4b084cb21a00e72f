"""Deterministic synthetic desk corpus: bars and discs with exact labels.

Each image holds one object on a flat background.  Bars are graspable
across their thickness (two opposite grasp directions), discs from any
direction.  Consecutive image pairs share one object instance in a new
pose, so object-wise splits have something to group.

All object coordinates are snapped to an eighth-pixel grid; with dyadic
coordinates the exact quarter-turn transforms used in the equivariance
tests stay bit-exact in float arithmetic.  Grasp angles are drawn from
the 720-point grid (j + 0.5) * pi/180, which keeps them safely inside the
angle bins of every standard codec (k in {36, 72, 120}).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import (
    ImageAnnotation,
    RegionAnnotation,
    _interior_mask,
    save_object_map,
    save_region_annotations,
)
from .geometry import ConvexPolygon
from .grasp import TAU, normalize_angle, oriented_box

_ANGLE_GRID = math.pi / 180.0


def _snap(x: float) -> float:
    return round(x * 8.0) / 8.0


def _safe_angle(rng: np.random.Generator) -> float:
    return (int(rng.integers(0, 360)) + 0.5) * _ANGLE_GRID


def _regular_polygon(cx: float, cy: float, radius: float, sides: int = 16) -> ConvexPolygon:
    ang = np.arange(sides) * (TAU / sides)
    pts = np.stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)], axis=1)
    return ConvexPolygon(pts)


def _paint(image: np.ndarray, mask: np.ndarray, color: np.ndarray) -> None:
    image[mask] = color


def synth_fixture(
    count: int,
    image_size: tuple[int, int] = (128, 128),
    seed: int = 0,
) -> tuple[list[np.ndarray], list[ImageAnnotation]]:
    """Render ``count`` images with analytically known grasp regions."""
    if count < 1:
        raise ValueError("count must be >= 1")
    h, w = image_size
    rng = np.random.default_rng(seed)
    scale = min(h, w)

    images: list[np.ndarray] = []
    anns: list[ImageAnnotation] = []
    object_cache: dict[int, dict] = {}

    for i in range(count):
        obj_index = i // 2
        if obj_index not in object_cache:
            kind = "bar" if obj_index % 2 == 0 else "disc"
            color = rng.integers(20, 120, size=3).astype(np.uint8)
            if kind == "bar":
                params = {
                    "length": _snap(rng.uniform(0.45, 0.72) * scale),
                    "thickness": _snap(rng.uniform(0.08, 0.16) * scale),
                }
            else:
                params = {"radius": _snap(rng.uniform(0.09, 0.15) * scale)}
            object_cache[obj_index] = {"kind": kind, "color": color, **params}
        obj = object_cache[obj_index]

        bg = int(rng.integers(150, 211))
        image = np.full((h, w, 3), bg, dtype=np.uint8)

        if obj["kind"] == "bar":
            length, thickness = obj["length"], obj["thickness"]
            alpha = _safe_angle(rng)
            margin = 0.5 * math.hypot(length, thickness) + 2.0
            cx = _snap(rng.uniform(margin, w - margin))
            cy = _snap(rng.uniform(margin, h - margin))
            body = oriented_box(cx, cy, length, thickness, alpha)
            _paint(image, _interior_mask(body, h, w), obj["color"])
            inset = min(6.0, 0.2 * length)
            region = RegionAnnotation(
                polygon=oriented_box(cx, cy, length - 2 * inset, 0.5 * thickness, alpha),
                angles=(
                    normalize_angle(alpha + 0.5 * math.pi),
                    normalize_angle(alpha + 1.5 * math.pi),
                ),
                omega=1.8 * thickness,
            )
        else:
            radius = obj["radius"]
            margin = radius + 2.0
            cx = _snap(rng.uniform(margin, w - margin))
            cy = _snap(rng.uniform(margin, h - margin))
            gx, gy = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
            disc = (gx - cx) ** 2 + (gy - cy) ** 2 <= radius ** 2
            _paint(image, disc, obj["color"])
            region = RegionAnnotation(
                polygon=_regular_polygon(cx, cy, 0.6 * radius),
                angles=None,
                omega=2.6 * radius,
            )

        images.append(image)
        anns.append(
            ImageAnnotation(
                image_id=f"synth-{i:03d}",
                object_id=f"{obj['kind']}{obj_index:02d}",
                regions=(region,),
                image_size=(h, w),
            )
        )
    return images, anns


def write_corpus(out_dir, images: list[np.ndarray],
                 anns: list[ImageAnnotation]) -> None:
    """Materialize a corpus: images/<id>.png + annotations.json + objects.csv."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    for image, ann in zip(images, anns):
        Image.fromarray(image).save(out / "images" / f"{ann.image_id}.png")
    save_region_annotations(out / "annotations.json", anns)
    save_object_map(out / "objects.csv", anns)
