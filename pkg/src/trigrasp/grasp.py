"""Oriented base-fixed triangle grasp representation and its codecs.

A planar grasp for an unsymmetrical three-finger gripper is a triangle
with a fixed base: the apex is the single-finger side, the base the
two-finger side.  Five parameters describe it: center ``(x, y)`` of the
triangle height, height ``omega`` (gripper opening), orientation
``theta``, and the fixed base length ``d`` (default 40 px).

Coordinate conventions (used consistently across the whole package):

  pixel frame : x right, y down; continuous coords, pixel (r, c) has its
                center at (c + 0.5, r + 0.5)
  theta       : measured counter-clockwise ON SCREEN from +x, range
                [0, 2*pi); the grasp axis unit vector in the pixel frame
                is u = (cos(theta), -sin(theta))
  apex        : lies at +u from the center, i.e. apex = c + (omega/2) * u

Because the two gripper sides are not interchangeable, theta lives on the
full circle.  The legacy rectangle form used by the evaluation metric
folds it to [0, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import counters
from .geometry import ConvexPolygon

TAU = 2.0 * math.pi

#: Fixed triangle base (two-finger side spacing) in pixels.
DEFAULT_BASE = 40.0

#: Grasp widths are normalized by this before storage; values at or above
#: it clamp to the largest float32 below 1.0 so map payloads stay in [0, 1).
WIDTH_SCALE = 150.0
_WIDTH_MAX_UNIT = float(np.nextafter(np.float32(1.0), np.float32(0.0)))

#: Angle-bin counts studied in the reference experiments.  Any k >= 1 is
#: accepted by the codec; these are the documented presets.
STANDARD_BIN_COUNTS = (36, 72, 120)


def normalize_angle(theta: float) -> float:
    """Map an angle to [0, 2*pi).  Exact multiples of 2*pi map to 0."""
    t = math.fmod(theta, TAU)
    if t < 0.0:
        t += TAU
    if t >= TAU:  # fmod can land on TAU through rounding
        t -= TAU
    return t + 0.0  # squash -0.0


def fold_pi(theta: float) -> float:
    """Fold an angle to [0, pi) (rectangle-metric convention)."""
    t = math.fmod(theta, math.pi)
    if t < 0.0:
        t += math.pi
    if t >= math.pi:
        t -= math.pi
    return t + 0.0  # squash -0.0


def circular_diff(a: float, b: float, period: float = math.pi) -> float:
    """Smallest circular distance between two angles on the given period."""
    d = math.fmod(abs(a - b), period)
    return min(d, period - d)


@dataclass(frozen=True)
class TriangleGrasp:
    """Five-parameter planar grasp; theta is normalized on construction."""

    x: float
    y: float
    omega: float
    theta: float
    d: float = DEFAULT_BASE

    def __post_init__(self):
        if self.omega < 0.0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if self.d <= 0.0:
            raise ValueError(f"base d must be > 0, got {self.d}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @property
    def axis(self) -> np.ndarray:
        """Unit vector along the grasp axis (center toward apex)."""
        return np.array([math.cos(self.theta), -math.sin(self.theta)])


@dataclass(frozen=True)
class RectGrasp:
    """Legacy oriented-rectangle grasp, used only by the evaluation metric.

    ``w`` runs along the grasp axis (the gripper opening), ``h``
    perpendicular to it; ``phi`` is folded to [0, pi) on construction.
    """

    cx: float
    cy: float
    w: float
    h: float
    phi: float

    def __post_init__(self):
        if self.w < 0.0:
            raise ValueError(f"w must be >= 0, got {self.w}")
        if self.h <= 0.0:
            raise ValueError(f"h must be > 0, got {self.h}")
        object.__setattr__(self, "phi", fold_pi(self.phi))


@dataclass(frozen=True)
class AngleCodec:
    """Uniform partition of [0, 2*pi) into k bins of width 2*pi/k."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"bin count must be >= 1, got {self.k}")

    @property
    def bin_width(self) -> float:
        return TAU / self.k


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx0: float
    cy0: float

    def __post_init__(self):
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class GraspPose7D:
    """Full gripper configuration: 3D position, orientation, opening (m)."""

    position: np.ndarray
    orientation: np.ndarray
    opening: float

    def __post_init__(self):
        R = np.asarray(self.orientation, dtype=float)
        if R.shape != (3, 3):
            raise ValueError(f"orientation must be 3x3, got {R.shape}")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("orientation is not orthonormal within 1e-9")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("orientation is not a proper rotation")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "orientation", R)


def vertices(g: TriangleGrasp) -> np.ndarray:
    """Triangle vertices as a (3, 2) array: apex, base_end_1, base_end_2.

    apex = c + (omega/2) u, base midpoint = c - (omega/2) u, base ends at
    +- (d/2) along v = (sin(theta), cos(theta)), the perpendicular of u.
    Triangle area is omega * d / 2.  omega = 0 degenerates to a segment.
    """
    c = g.center
    u = g.axis
    v = np.array([math.sin(g.theta), math.cos(g.theta)])
    apex = c + 0.5 * g.omega * u
    base_mid = c - 0.5 * g.omega * u
    return np.array([apex, base_mid + 0.5 * g.d * v, base_mid - 0.5 * g.d * v])


def to_rect(g: TriangleGrasp) -> RectGrasp:
    """Rectangle form for the evaluation metric: w = omega along the grasp
    axis, h = d perpendicular, angle folded mod pi."""
    return RectGrasp(cx=g.x, cy=g.y, w=g.omega, h=g.d, phi=fold_pi(g.theta))


def oriented_box(cx: float, cy: float, w: float, h: float, phi: float) -> ConvexPolygon:
    """Rectangle polygon: w along the axis u(phi), h perpendicular."""
    u = np.array([math.cos(phi), -math.sin(phi)])
    v = np.array([math.sin(phi), math.cos(phi)])
    c = np.array([cx, cy])
    hw, hh = 0.5 * w, 0.5 * h
    return ConvexPolygon(
        np.array([c + hw * u + hh * v, c - hw * u + hh * v,
                  c - hw * u - hh * v, c + hw * u - hh * v])
    )


def rect_polygon(r: RectGrasp) -> ConvexPolygon:
    """Corner polygon of a rectangle grasp (for IOU computations)."""
    return oriented_box(r.cx, r.cy, r.w, r.h, r.phi)


def triangle_polygon(g: TriangleGrasp) -> ConvexPolygon:
    """Corner polygon of a triangle grasp (diagnostic IOU only)."""
    return ConvexPolygon(vertices(g))


def encode_angle(angles, codec: AngleCodec) -> np.ndarray:
    """Multi-hot bin vector (float32, length k) for a set of grasp angles.

    ``angles=None`` means the grasp angle is unrestricted (round objects):
    every bin is set.  Angles must already be normalized to [0, 2*pi];
    exactly 2*pi wraps to bin 0, anything else outside raises.
    """
    out = np.zeros(codec.k, dtype=np.float32)
    if angles is None:
        out[:] = 1.0
        return out
    for a in angles:
        if not math.isfinite(a) or a < 0.0 or a > TAU:
            raise ValueError(f"angle {a!r} outside [0, 2*pi]")
        out[angle_bin(a, codec)] = 1.0
    return out


def angle_bin(theta: float, codec: AngleCodec) -> int:
    """Bin index of a single angle: floor(theta / delta), clamped to k-1."""
    t = normalize_angle(theta)
    return min(int(t / codec.bin_width), codec.k - 1)


def decode_angle(bin_index: int, codec: AngleCodec) -> float:
    """Center angle of a bin; inverse of :func:`angle_bin` up to delta/2."""
    if not 0 <= bin_index < codec.k:
        raise ValueError(f"bin {bin_index} out of range for k={codec.k}")
    return (bin_index + 0.5) * codec.bin_width


def scale_width(omega_px: float) -> float:
    """Normalize an opening in pixels to [0, 1); clamps count a warning."""
    if omega_px < 0.0:
        raise ValueError(f"omega must be >= 0, got {omega_px}")
    value = omega_px / WIDTH_SCALE
    if value > _WIDTH_MAX_UNIT:
        counters.bump("width_clamp")
        return _WIDTH_MAX_UNIT
    return value


def unscale_width(value: float) -> float:
    """Inverse of :func:`scale_width` (pixels)."""
    return value * WIDTH_SCALE


def project_7d(
    g: TriangleGrasp,
    depth_m: float,
    cam: CameraModel,
    surface_normal: np.ndarray,
) -> GraspPose7D:
    """Project the planar grasp back to the full 7D gripper configuration.

    Position comes from pinhole back-projection of (x, y) at ``depth_m``;
    the approach axis is the negated surface normal; the in-plane grasp
    direction is the image-axis direction re-projected onto the plane
    perpendicular to the approach; the opening converts via similar
    triangles (omega * depth / fx).
    """
    if depth_m <= 0.0:
        raise ValueError(f"depth must be > 0, got {depth_m}")
    n = np.asarray(surface_normal, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-6:
        raise ValueError("surface normal must be a unit vector")

    position = np.array(
        [
            (g.x - cam.cx0) * depth_m / cam.fx,
            (g.y - cam.cy0) * depth_m / cam.fy,
            depth_m,
        ]
    )

    z_axis = -n
    in_plane = np.array([math.cos(g.theta), -math.sin(g.theta), 0.0])
    x_axis = in_plane - np.dot(in_plane, z_axis) * z_axis
    norm = np.linalg.norm(x_axis)
    if norm < 1e-9:
        raise ValueError("grasp axis is parallel to the approach direction")
    x_axis /= norm
    y_axis = np.cross(z_axis, x_axis)
    orientation = np.column_stack([x_axis, y_axis, z_axis])

    opening = g.omega * depth_m / cam.fx
    return GraspPose7D(position=position, orientation=orientation, opening=opening)
