"""Online geometric augmentation: centroid crop, rotation, zoom.

Images are resampled (bilinear, replicate-edge fill) while annotations
are transformed exactly, vertex by vertex; labels are rasterized only
after the full chain, so label maps never suffer interpolation.

Rotation follows the package angle convention: rotating by phi sends
every grasp angle theta to (theta + phi) mod 2*pi, and region polygons
move under the matching linear map about the image center.  Angles
within 1e-12 of a multiple of pi/2 take an exact integer index path
(np.rot90 for the image, a {0, +-1} matrix for the polygons), which keeps
quarter-turn label transforms bit-exact.

Transformed polygons are clipped against the image frame afterwards;
regions that leave the frame entirely are dropped and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import counters
from .dataset import ImageAnnotation, RegionAnnotation
from .geometry import ConvexPolygon, intersect
from .grasp import TAU, WIDTH_SCALE, normalize_angle

#: Input crop size fixed by the reference training setup.
CROP_SIZE = 320

DEFAULT_ZOOM_RANGE = (0.8, 1.25)

_QUARTER_SNAP = 1e-12
_QUARTER_COS_SIN = {0: (1.0, 0.0), 1: (0.0, 1.0), 2: (-1.0, 0.0), 3: (0.0, -1.0)}


@dataclass(frozen=True)
class AugmentParams:
    rotation: float
    zoom: float
    seed: int
    crop_size: int = CROP_SIZE

    def __post_init__(self):
        if self.crop_size != CROP_SIZE:
            raise ValueError(f"crop_size is fixed at {CROP_SIZE}")
        if not 0.0 <= self.rotation < TAU:
            raise ValueError("rotation must be in [0, 2*pi)")
        if self.zoom <= 0.0:
            raise ValueError("zoom must be positive")


def sample_params(
    seed: int,
    index: int = 0,
    zoom_range: tuple[float, float] = DEFAULT_ZOOM_RANGE,
) -> AugmentParams:
    """Draw one augmentation parameter set, deterministic per (seed, index).

    Rotation is uniform on [0, 2*pi), zoom uniform on the given range.
    ``index`` is the per-image stream id, so parallel workers can draw
    independent parameters without sharing generator state.
    """
    zmin, zmax = zoom_range
    if not 0.0 < zmin <= zmax:
        raise ValueError(f"bad zoom range {zoom_range}")
    rng = np.random.default_rng((seed, index))
    rotation = rng.uniform(0.0, TAU)
    zoom_factor = zmin if zmin == zmax else rng.uniform(zmin, zmax)
    return AugmentParams(rotation=normalize_angle(rotation), zoom=zoom_factor, seed=seed)


def _frame_polygon(h: int, w: int) -> ConvexPolygon:
    return ConvexPolygon(np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]))


def _clip_regions(
    regions, h: int, w: int, transform=None
) -> tuple[RegionAnnotation, ...]:
    frame = _frame_polygon(h, w)
    out = []
    for region in regions:
        verts = region.polygon.vertices
        if transform is not None:
            verts = transform(verts)
        try:
            moved = ConvexPolygon(verts)
        except ValueError:
            counters.bump("region_dropped")
            continue
        clipped = intersect(moved, frame)
        if clipped is None:
            counters.bump("region_dropped")
            continue
        # clip tolerance can leave vertices a hair outside the frame; snap
        # them in so the bounds invariant holds exactly (interior coords
        # are untouched, keeping quarter-turn transforms bit-exact)
        snapped = np.clip(clipped.vertices, 0.0, [float(w), float(h)])
        out.append(RegionAnnotation(polygon=ConvexPolygon(snapped, validate=False),
                                    angles=region.angles, omega=region.omega))
    return tuple(out)


def _polygon_centroid(poly: ConvexPolygon) -> np.ndarray:
    v = poly.vertices
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum()
    if abs(a) < 1e-12:
        return v.mean(axis=0)
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (3.0 * a)


def centroid_crop(
    image: np.ndarray | None,
    ann: ImageAnnotation,
    size: int = CROP_SIZE,
) -> tuple[np.ndarray | None, ImageAnnotation]:
    """Crop a size x size window centered on the mean of region centroids.

    The window is clamped to the image; images smaller than the window are
    padded first with replicated edges.  Annotations translate with the
    window; regions that end up outside are dropped and counted.  With no
    regions the window falls back to the image center (counted).
    """
    h, w = ann.image_size
    if ann.regions:
        centroid = np.mean(
            [_polygon_centroid(r.polygon) for r in ann.regions], axis=0
        )
    else:
        counters.bump("crop_without_regions")
        centroid = np.array([w / 2.0, h / 2.0])

    pad_h = max(0, size - h)
    pad_w = max(0, size - w)
    if image is not None and (pad_h or pad_w):
        image = np.pad(image, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
    full_h, full_w = h + pad_h, w + pad_w

    x0 = min(max(int(round(centroid[0])) - size // 2, 0), full_w - size)
    y0 = min(max(int(round(centroid[1])) - size // 2, 0), full_h - size)

    out_image = None if image is None else image[y0:y0 + size, x0:x0 + size].copy()
    shift = np.array([x0, y0], dtype=float)
    regions = _clip_regions(ann.regions, size, size, lambda v: v - shift)
    return out_image, ImageAnnotation(
        image_id=ann.image_id,
        object_id=ann.object_id,
        regions=regions,
        image_size=(size, size),
    )


def _quarter_of(phi: float) -> int | None:
    m = phi / (0.5 * math.pi)
    q = round(m)
    if abs(m - q) * 0.5 * math.pi < _QUARTER_SNAP:
        return q % 4
    return None


def _resample(image: np.ndarray, matrix: np.ndarray, offset: np.ndarray) -> np.ndarray:
    src = image.astype(np.float64)
    out = np.empty_like(src)
    for ch in range(src.shape[2]):
        out[:, :, ch] = ndimage.affine_transform(
            src[:, :, ch], matrix, offset=offset, order=1, mode="nearest"
        )
    return np.clip(np.rint(out), 0, 255).astype(image.dtype)


def rotate(
    image: np.ndarray | None,
    ann: ImageAnnotation,
    phi: float,
) -> tuple[np.ndarray | None, ImageAnnotation]:
    """Rotate image content and annotations by phi about the image center.

    Every grasp angle becomes (theta + phi) mod 2*pi; widths are
    unchanged.  phi = 0 is a strict identity on pixels and annotations.
    """
    phi = normalize_angle(phi)
    h, w = ann.image_size
    if image is not None and image.shape[:2] != (h, w):
        raise ValueError("image shape does not match annotation size")

    quarter = _quarter_of(phi)
    if quarter == 0:
        return (None if image is None else image.copy()), ann

    center = np.array([w / 2.0, h / 2.0])
    if quarter is not None and (quarter == 2 or h == w):
        c, s = _QUARTER_COS_SIN[quarter]
        out_image = None if image is None else np.rot90(image, k=quarter, axes=(0, 1)).copy()
    else:
        quarter = None
        c, s = math.cos(phi), math.sin(phi)
        if image is not None:
            # inverse content map in (row, col) index coordinates
            inv = np.array([[c, s], [-s, c]])
            t = np.array([h / 2.0 - 0.5, w / 2.0 - 0.5])
            out_image = _resample(image, inv, t - inv @ t)
        else:
            out_image = None

    rot = np.array([[c, s], [-s, c]])

    def move(verts: np.ndarray) -> np.ndarray:
        return (verts - center) @ rot.T + center

    regions = []
    for region in _clip_regions(ann.regions, h, w, move):
        angles = region.angles
        if angles is not None:
            angles = tuple(normalize_angle(a + phi) for a in angles)
        regions.append(RegionAnnotation(polygon=region.polygon, angles=angles,
                                        omega=region.omega))
    return out_image, ImageAnnotation(
        image_id=ann.image_id, object_id=ann.object_id,
        regions=tuple(regions), image_size=(h, w),
    )


def zoom(
    image: np.ndarray | None,
    ann: ImageAnnotation,
    s: float,
) -> tuple[np.ndarray | None, ImageAnnotation]:
    """Scale content by s about the image center.

    Polygon coordinates and omega scale by s (omega clamps at the width
    ceiling, counted); grasp angles are unchanged.  s = 1 is the identity.
    """
    if s <= 0.0:
        raise ValueError(f"zoom factor must be positive, got {s}")
    h, w = ann.image_size
    if image is not None and image.shape[:2] != (h, w):
        raise ValueError("image shape does not match annotation size")
    if s == 1.0:
        return (None if image is None else image.copy()), ann

    center = np.array([w / 2.0, h / 2.0])
    if image is not None:
        t = np.array([h / 2.0 - 0.5, w / 2.0 - 0.5])
        inv = np.eye(2) / s
        out_image = _resample(image, inv, t - inv @ t)
    else:
        out_image = None

    def move(verts: np.ndarray) -> np.ndarray:
        return (verts - center) * s + center

    regions = []
    for region in _clip_regions(ann.regions, h, w, move):
        omega = region.omega * s
        if omega > WIDTH_SCALE:
            counters.bump("zoom_width_clamp")
            omega = WIDTH_SCALE
        regions.append(RegionAnnotation(polygon=region.polygon,
                                        angles=region.angles, omega=omega))
    return out_image, ImageAnnotation(
        image_id=ann.image_id, object_id=ann.object_id,
        regions=tuple(regions), image_size=(h, w),
    )


def apply_augment(
    image: np.ndarray | None,
    ann: ImageAnnotation,
    params: AugmentParams,
) -> tuple[np.ndarray | None, ImageAnnotation]:
    """Full chain in training order: centroid crop, rotate, zoom."""
    image, ann = centroid_crop(image, ann, params.crop_size)
    image, ann = rotate(image, ann, params.rotation)
    return zoom(image, ann, params.zoom)
