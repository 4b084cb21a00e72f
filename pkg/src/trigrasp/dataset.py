"""Annotation formats, label rasterization, and dataset splits.

Region annotations are the native ground-truth format: per image, a list
of graspable regions, each a convex polygon whose interior pixels all
share the same grasp angles and opening.  On disk they are JSON (UTF-8),
one object per image or an array of them:

    {
      "image_id": "synth-000",
      "object_id": "bar-0",
      "size": [H, W],
      "regions": [
        {"polygon": [[x, y], ...], "angles": [1.5708, 4.7124], "omega": 36.0},
        {"polygon": [[x, y], ...], "angles": "any",            "omega": 52.0}
      ]
    }

"angles": "any" marks regions with no angle restriction (round objects).
Object identity can also come from a sidecar CSV ("image_id,object_id",
header required), which takes precedence when supplied.

Legacy rectangle ground truth (one "x y" pair per line, four corner lines
per rectangle) is parsed by :func:`parse_cornell_rects`.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import counters
from .geometry import ConvexPolygon
from .gmap import GmapHeader, KIND_LABEL, read_gmap, write_gmap
from .grasp import (
    TAU,
    AngleCodec,
    RectGrasp,
    WIDTH_SCALE,
    encode_angle,
    fold_pi,
    scale_width,
)


class AnnotationError(ValueError):
    """Region-annotation file violates the schema or an invariant."""


class CornellError(ValueError):
    """Malformed legacy rectangle file."""


@dataclass(frozen=True)
class RegionAnnotation:
    """One graspable region: polygon + shared grasp angles + opening.

    ``angles`` is a tuple of radians in [0, 2*pi), or None for
    unrestricted angle.
    """

    polygon: ConvexPolygon
    angles: tuple[float, ...] | None
    omega: float

    def __post_init__(self):
        if not 0.0 <= self.omega <= WIDTH_SCALE:
            raise AnnotationError(
                f"omega {self.omega} outside [0, {WIDTH_SCALE:g}]"
            )
        if self.angles is not None:
            if len(self.angles) == 0:
                raise AnnotationError("angles must be nonempty or \"any\"")
            for a in self.angles:
                if not (math.isfinite(a) and 0.0 <= a < TAU):
                    raise AnnotationError(f"angle {a!r} outside [0, 2*pi)")


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    object_id: str | None
    regions: tuple[RegionAnnotation, ...]
    image_size: tuple[int, int]  # (H, W)

    def __post_init__(self):
        if not self.image_id:
            raise AnnotationError("image_id must be nonempty")
        h, w = self.image_size
        if h < 1 or w < 1:
            raise AnnotationError(f"bad image size {self.image_size}")
        for i, region in enumerate(self.regions):
            v = region.polygon.vertices
            if (v[:, 0].min() < 0.0 or v[:, 0].max() > w
                    or v[:, 1].min() < 0.0 or v[:, 1].max() > h):
                raise AnnotationError(
                    f"{self.image_id} region {i}: polygon exceeds image bounds"
                )


@dataclass
class LabelMaps:
    """Per-pixel training targets: binary confidence, multi-hot angle bins,
    normalized width.  Angle and width are zero wherever confidence is 0."""

    confidence: np.ndarray  # (H, W) float32, values {0, 1}
    angle: np.ndarray       # (k, H, W) float32, multi-hot
    width: np.ndarray       # (H, W) float32 in [0, 1)
    codec: AngleCodec

    def __post_init__(self):
        h, w = self.confidence.shape
        if self.angle.shape != (self.codec.k, h, w) or self.width.shape != (h, w):
            raise ValueError("label map shapes are inconsistent")

    @property
    def image_size(self) -> tuple[int, int]:
        return self.confidence.shape

    def check_invariants(self) -> None:
        off = self.confidence == 0.0
        if np.any(self.angle[:, off] != 0.0) or np.any(self.width[off] != 0.0):
            raise ValueError("angle/width nonzero outside labelled pixels")
        on = ~off
        if np.any(on) and np.any(self.angle[:, on].max(axis=0) <= 0.0):
            raise ValueError("labelled pixel with no hot angle bin")

    def to_array(self) -> np.ndarray:
        """Channel stack [confidence, k angle planes, width], (k+2, H, W)."""
        return np.concatenate(
            [self.confidence[None], self.angle, self.width[None]], axis=0
        ).astype(np.float32)


def label_maps_from_array(data: np.ndarray, codec: AngleCodec) -> LabelMaps:
    k = codec.k
    if data.shape[0] != k + 2:
        raise ValueError(f"expected {k + 2} channels, got {data.shape[0]}")
    return LabelMaps(
        confidence=data[0].astype(np.float32),
        angle=data[1:1 + k].astype(np.float32),
        width=data[1 + k].astype(np.float32),
        codec=codec,
    )


def write_label_gmap(path, maps: LabelMaps) -> None:
    h, w = maps.image_size
    header = GmapHeader(kind=KIND_LABEL, k=maps.codec.k, height=h, width=w)
    write_gmap(path, header, maps.to_array())


def read_label_gmap(path) -> LabelMaps:
    header, data = read_gmap(path)
    if header.kind != KIND_LABEL:
        raise ValueError(f"{path}: expected a label GMAP, got {header.kind}")
    return label_maps_from_array(data, AngleCodec(header.k))


# ---------------------------------------------------------------------------
# Legacy rectangle files
# ---------------------------------------------------------------------------

def parse_cornell_rects(text: str) -> list[RectGrasp]:
    """Parse a cpos.txt-style corner list into rectangle grasps.

    Four "x y" lines per rectangle.  The first corner edge runs along the
    grasp axis (gives w and the angle), the second gives h.  Corner groups
    containing NaN are skipped and counted, matching how the public
    dataset marks unusable entries.
    """
    points: list[tuple[float, float]] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise CornellError(f"line {ln}: expected 'x y', got {stripped!r}")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise CornellError(f"line {ln}: {exc}") from None
    if len(points) % 4 != 0:
        raise CornellError(f"{len(points)} corner lines, not a multiple of 4")
    rects = []
    for i in range(0, len(points), 4):
        quad = np.array(points[i:i + 4], dtype=float)
        if not np.all(np.isfinite(quad)):
            counters.bump("cornell_nan_group")
            continue
        rects.append(_quad_to_rect(quad))
    return rects


def _edge_angle(dx: float, dy: float) -> float:
    # angle whose axis u = (cos t, -sin t) is parallel to (dx, dy), mod pi
    return fold_pi(math.atan2(-dy, dx))


def _quad_to_rect(quad: np.ndarray) -> RectGrasp:
    cx, cy = quad.mean(axis=0)
    e1 = quad[1] - quad[0]
    e2 = quad[2] - quad[1]
    w = float(np.hypot(*e1))
    h = float(np.hypot(*e2))
    phi = _edge_angle(e1[0], e1[1])
    if abs(w - h) <= 1e-9:
        # square: the w/h assignment is ambiguous, pick the smaller angle
        # so any corner ordering canonicalizes to the same grasp
        phi = min(phi, _edge_angle(e2[0], e2[1]))
    return RectGrasp(cx=float(cx), cy=float(cy), w=w, h=h, phi=phi)


def serialize_cornell_rects(rects: list[RectGrasp]) -> str:
    """Inverse of :func:`parse_cornell_rects` (round-trips within 1e-6 px)."""
    lines = []
    for r in rects:
        u = np.array([math.cos(r.phi), -math.sin(r.phi)])
        v = np.array([math.sin(r.phi), math.cos(r.phi)])
        c = np.array([r.cx, r.cy])
        hw, hh = 0.5 * r.w, 0.5 * r.h
        for corner in (c - hw * u - hh * v, c + hw * u - hh * v,
                       c + hw * u + hh * v, c - hw * u + hh * v):
            lines.append(f"{corner[0]:.9f} {corner[1]:.9f}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_cornell_rects(path) -> list[RectGrasp]:
    return parse_cornell_rects(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Region annotation JSON
# ---------------------------------------------------------------------------

def _region_from_json(obj: dict, where: str) -> RegionAnnotation:
    try:
        polygon = ConvexPolygon(np.array(obj["polygon"], dtype=float))
    except (KeyError, ValueError) as exc:
        raise AnnotationError(f"{where}: bad polygon: {exc}") from None
    raw_angles = obj.get("angles")
    if raw_angles == "any":
        angles = None
    elif isinstance(raw_angles, (list, tuple)):
        angles = tuple(float(a) for a in raw_angles)
    else:
        raise AnnotationError(
            f"{where}: angles must be a list of radians or \"any\""
        )
    if "omega" not in obj:
        raise AnnotationError(f"{where}: missing omega")
    try:
        return RegionAnnotation(polygon=polygon, angles=angles,
                                omega=float(obj["omega"]))
    except AnnotationError as exc:
        raise AnnotationError(f"{where}: {exc}") from None


def _image_from_json(obj: dict) -> ImageAnnotation:
    image_id = obj.get("image_id") or ""
    where = f"image {image_id or '<missing id>'}"
    try:
        h, w = (int(x) for x in obj["size"])
    except (KeyError, TypeError, ValueError):
        raise AnnotationError(f"{where}: missing or bad size [H, W]") from None
    regions = tuple(
        _region_from_json(r, f"{where} region {i}")
        for i, r in enumerate(obj.get("regions", []))
    )
    return ImageAnnotation(
        image_id=image_id,
        object_id=obj.get("object_id"),
        regions=regions,
        image_size=(h, w),
    )


def load_region_annotations(path) -> list[ImageAnnotation]:
    """Load annotations from a JSON file (single object or array)."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: invalid JSON: {exc}") from None
    items = payload if isinstance(payload, list) else [payload]
    anns = [_image_from_json(obj) for obj in items]
    seen: set[str] = set()
    for ann in anns:
        if ann.image_id in seen:
            raise AnnotationError(f"duplicate image_id {ann.image_id!r}")
        seen.add(ann.image_id)
    return anns


def region_to_json(region: RegionAnnotation) -> dict:
    return {
        "polygon": [[float(x), float(y)] for x, y in region.polygon.vertices],
        "angles": "any" if region.angles is None else list(region.angles),
        "omega": float(region.omega),
    }


def annotation_to_json(ann: ImageAnnotation) -> dict:
    obj = {
        "image_id": ann.image_id,
        "size": [int(ann.image_size[0]), int(ann.image_size[1])],
        "regions": [region_to_json(r) for r in ann.regions],
    }
    if ann.object_id is not None:
        obj["object_id"] = ann.object_id
    return obj


def save_region_annotations(path, anns: list[ImageAnnotation]) -> None:
    payload = [annotation_to_json(a) for a in anns]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_object_map(path) -> dict[str, str]:
    """Sidecar CSV (image_id,object_id; header required) -> mapping."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["image_id", "object_id"]:
            raise AnnotationError(f"{path}: expected header 'image_id,object_id'")
        return {row[0]: row[1] for row in reader if row}


def save_object_map(path, anns: list[ImageAnnotation]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "object_id"])
        for ann in anns:
            writer.writerow([ann.image_id, ann.object_id or ""])


def apply_object_map(anns: list[ImageAnnotation],
                     mapping: dict[str, str]) -> list[ImageAnnotation]:
    out = []
    for ann in anns:
        oid = mapping.get(ann.image_id, ann.object_id)
        out.append(ImageAnnotation(ann.image_id, oid, ann.regions, ann.image_size))
    return out


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def _interior_mask(polygon: ConvexPolygon, height: int, width: int) -> np.ndarray:
    """Pixels whose centers (c+0.5, r+0.5) lie strictly inside the polygon.

    Strict interior (boundary excluded) keeps the result deterministic and
    independent of vertex orientation; the test runs in float64.
    """
    x0, y0, x1, y1 = polygon.bounds()
    c0 = max(0, int(math.ceil(x0 - 0.5)))
    c1 = min(width - 1, int(math.floor(x1 - 0.5)))
    r0 = max(0, int(math.ceil(y0 - 0.5)))
    r1 = min(height - 1, int(math.floor(y1 - 0.5)))
    mask = np.zeros((height, width), dtype=bool)
    if c0 > c1 or r0 > r1:
        return mask
    xs = np.arange(c0, c1 + 1, dtype=np.float64) + 0.5
    ys = np.arange(r0, r1 + 1, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    sub = np.ones(gx.shape, dtype=bool)
    v = polygon.vertices
    n = len(v)
    for i in range(n):
        ax, ay = v[i]
        bx, by = v[(i + 1) % n]
        sub &= (gx - ax) * (by - ay) - (gy - ay) * (bx - ax) > 0.0
    mask[r0:r1 + 1, c0:c1 + 1] = sub
    return mask


def rasterize(ann: ImageAnnotation, codec: AngleCodec) -> LabelMaps:
    """Per-pixel label maps for one image.

    Pixel centers strictly inside any region get confidence 1, that
    region's angle bins, and its scaled width.  Overlapping regions union
    their bins and keep the maximum width (order-independent).
    """
    h, w = ann.image_size
    conf = np.zeros((h, w), dtype=np.float32)
    angle = np.zeros((codec.k, h, w), dtype=np.float32)
    width = np.zeros((h, w), dtype=np.float32)
    for region in ann.regions:
        mask = _interior_mask(region.polygon, h, w)
        if not mask.any():
            continue
        bins = encode_angle(region.angles, codec)
        conf[mask] = 1.0
        angle[:, mask] = np.maximum(angle[:, mask], bins[:, None])
        width[mask] = np.maximum(width[mask], np.float32(scale_width(region.omega)))
    return LabelMaps(confidence=conf, angle=angle, width=width, codec=codec)


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

IMAGE_WISE = "image-wise"
OBJECT_WISE = "object-wise"


@dataclass(frozen=True)
class SplitSpec:
    mode: str = IMAGE_WISE
    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (IMAGE_WISE, OBJECT_WISE):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if not 0.0 <= self.train_fraction <= 1.0:
            raise ValueError("train_fraction must be in [0, 1]")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def make_split(
    anns: list[ImageAnnotation], spec: SplitSpec
) -> tuple[list[str], list[str]]:
    """Deterministic train/test partition of image ids.

    image-wise draws images directly (train gets round(fraction * N));
    object-wise shuffles whole objects and fills the train set with entire
    objects until the target is reached, so no object is ever split.
    """
    if not anns:
        raise ValueError("empty dataset")
    ids = sorted(a.image_id for a in anns)
    target = _round_half_up(spec.train_fraction * len(ids))
    rng = random.Random(spec.seed)
    if spec.mode == IMAGE_WISE:
        shuffled = ids[:]
        rng.shuffle(shuffled)
        train = set(shuffled[:target])
    else:
        by_object: dict[str, list[str]] = {}
        for a in anns:
            if not a.object_id:
                raise ValueError(
                    f"object-wise split requested but {a.image_id} has no object_id"
                )
            by_object.setdefault(a.object_id, []).append(a.image_id)
        objects = sorted(by_object)
        rng.shuffle(objects)
        train = set()
        for obj in objects:
            if len(train) >= target:
                break
            train.update(by_object[obj])
    return ([i for i in ids if i in train], [i for i in ids if i not in train])


def split_to_json(spec: SplitSpec, train: list[str], test: list[str]) -> dict:
    return {
        "mode": spec.mode,
        "train_fraction": spec.train_fraction,
        "seed": spec.seed,
        "train": list(train),
        "test": list(test),
    }


def save_split(path, spec: SplitSpec, train: list[str], test: list[str]) -> None:
    Path(path).write_text(
        json.dumps(split_to_json(spec, train, test), indent=2) + "\n",
        encoding="utf-8",
    )


def load_split(path) -> dict:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if "test" not in obj or not isinstance(obj["test"], list):
        raise AnnotationError(f"{path}: split file needs a 'test' id list")
    return obj
