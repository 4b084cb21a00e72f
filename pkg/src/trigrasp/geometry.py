"""Exact convex-polygon intersection and IOU for oriented shapes.

Polygons live in the pixel frame (x right, y down) and are stored
counter-clockwise as seen on screen.  With y pointing down this means the
standard shoelace sum is negative, so the signed area used here negates
it: screen-CCW polygons have positive signed area and interior points sit
on the negative-cross side of every directed edge.

Two independent IOU routes are provided: half-plane clipping
(:func:`intersect` + :func:`area`) and a grid-counting oracle
(:func:`raster_iou_oracle`).  The oracle shares no code with the clipper
beyond the polygon container, so each can check the other.
"""

from __future__ import annotations

import numpy as np

#: Points within this distance (px) of a clip line count as on the line.
CLIP_TOL = 1e-9

#: Intersections with area below this are reported as empty.
DEGENERATE_AREA = 1e-12


class ConvexPolygon:
    """Ordered convex polygon; orientation normalized to screen-CCW."""

    __slots__ = ("vertices",)

    def __init__(self, vertices, validate: bool = True):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError(f"need >= 3 2D vertices, got shape {v.shape}")
        if _signed_area(v) < 0.0:
            v = v[::-1].copy()
        self.vertices = v
        if validate:
            self._check_convex()

    def _check_convex(self):
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        # screen-CCW turns have cross <= 0; allow tolerance for collinear runs
        if np.any(cross > CLIP_TOL):
            raise ValueError("polygon is not convex (or self-intersecting)")

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        pts = ", ".join(f"({x:g},{y:g})" for x, y in self.vertices)
        return f"ConvexPolygon[{pts}]"

    def translated(self, dx: float, dy: float) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + np.array([dx, dy]), validate=False)

    def bounds(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max()


def _signed_area(v: np.ndarray) -> float:
    # negated standard shoelace: positive for screen-CCW in the y-down frame
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return -0.5 * float(np.sum(x * yn - xn * y))


def area(p: ConvexPolygon) -> float:
    """Shoelace area in px^2 (non-negative)."""
    return abs(_signed_area(p.vertices))


def intersect(p: ConvexPolygon, q: ConvexPolygon) -> ConvexPolygon | None:
    """Exact intersection of two convex polygons, or None when (near) empty.

    Sutherland-Hodgman: clip p successively against each half-plane of q.
    Points within CLIP_TOL px of a clip line are treated as on the line;
    consecutive duplicates are merged.  Results with area below
    DEGENERATE_AREA are reported as empty.
    """
    out = [tuple(pt) for pt in p.vertices]
    clip = q.vertices
    n = len(clip)
    for i in range(n):
        if not out:
            return None
        a = clip[i]
        b = clip[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        elen = (ex * ex + ey * ey) ** 0.5
        if elen < CLIP_TOL:
            continue
        # signed distance: positive on the interior side of a screen-CCW edge
        dist = [((pt[0] - a[0]) * ey - (pt[1] - a[1]) * ex) / elen for pt in out]
        kept: list[tuple[float, float]] = []
        m = len(out)
        for j in range(m):
            s, e = out[j], out[(j + 1) % m]
            ds, de = dist[j], dist[(j + 1) % m]
            s_in = ds >= -CLIP_TOL
            e_in = de >= -CLIP_TOL
            if s_in:
                kept.append(s)
                if not e_in:
                    kept.append(_cross_point(s, e, ds, de))
            elif e_in:
                kept.append(_cross_point(s, e, ds, de))
        out = _dedupe(kept)
    if len(out) < 3:
        return None
    poly = ConvexPolygon(np.array(out), validate=False)
    if area(poly) < DEGENERATE_AREA:
        return None
    return poly


def _cross_point(s, e, ds, de) -> tuple[float, float]:
    t = ds / (ds - de)
    return (s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1]))


def _dedupe(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    if not points:
        return points
    out = [points[0]]
    for pt in points[1:]:
        last = out[-1]
        if abs(pt[0] - last[0]) > CLIP_TOL or abs(pt[1] - last[1]) > CLIP_TOL:
            out.append(pt)
    if len(out) > 1:
        first, last = out[0], out[-1]
        if abs(first[0] - last[0]) <= CLIP_TOL and abs(first[1] - last[1]) <= CLIP_TOL:
            out.pop()
    return out


def iou(p: ConvexPolygon, q: ConvexPolygon) -> float:
    """Intersection over union; 0 when the union has zero area.

    The operand pair is put in a canonical order first so that
    iou(p, q) == iou(q, p) holds exactly, not just within float noise.
    """
    a, b = sorted((p, q), key=lambda poly: poly.vertices.tobytes())
    inter = intersect(a, b)
    inter_area = area(inter) if inter is not None else 0.0
    union = area(a) + area(b) - inter_area
    if union <= 0.0:
        return 0.0
    return inter_area / union


def _inside_mask(poly: ConvexPolygon, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    v = poly.vertices
    mask = np.ones(xs.shape, dtype=bool)
    n = len(v)
    for i in range(n):
        ax, ay = v[i]
        bx, by = v[(i + 1) % n]
        mask &= (xs - ax) * (by - ay) - (ys - ay) * (bx - ax) >= 0.0
    return mask


def raster_iou_oracle(p: ConvexPolygon, q: ConvexPolygon, grid_step: float) -> float:
    """IOU by point counting on a regular grid over the joint bounding box.

    Independent of the clipping route; used as its test oracle.  Converges
    to the exact IOU as grid_step -> 0.
    """
    if grid_step <= 0.0:
        raise ValueError(f"grid_step must be > 0, got {grid_step}")
    px0, py0, px1, py1 = p.bounds()
    qx0, qy0, qx1, qy1 = q.bounds()
    x0, y0 = min(px0, qx0), min(py0, qy0)
    x1, y1 = max(px1, qx1), max(py1, qy1)
    nx = max(1, int(np.ceil((x1 - x0) / grid_step)))
    ny = max(1, int(np.ceil((y1 - y0) / grid_step)))
    xs = x0 + (np.arange(nx) + 0.5) * grid_step
    ys = y0 + (np.arange(ny) + 0.5) * grid_step
    gx, gy = np.meshgrid(xs, ys)
    in_p = _inside_mask(p, gx, gy)
    in_q = _inside_mask(q, gx, gy)
    union = int(np.count_nonzero(in_p | in_q))
    if union == 0:
        return 0.0
    return int(np.count_nonzero(in_p & in_q)) / union
