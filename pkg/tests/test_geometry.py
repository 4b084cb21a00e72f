import math

import numpy as np
import pytest

from trigrasp.geometry import (
    ConvexPolygon,
    area,
    intersect,
    iou,
    raster_iou_oracle,
)
from trigrasp.grasp import RectGrasp, TriangleGrasp, rect_polygon, triangle_polygon


def square(x0, y0, side):
    return ConvexPolygon([[x0, y0], [x0 + side, y0],
                          [x0 + side, y0 + side], [x0, y0 + side]])


def random_triangle(rng, center=60.0, spread=30.0):
    g = TriangleGrasp(
        x=rng.uniform(center - spread, center + spread),
        y=rng.uniform(center - spread, center + spread),
        omega=rng.uniform(20, 80),
        theta=rng.uniform(0, 2 * math.pi),
    )
    return triangle_polygon(g)


def random_rect(rng, center=60.0, spread=30.0):
    r = RectGrasp(
        cx=rng.uniform(center - spread, center + spread),
        cy=rng.uniform(center - spread, center + spread),
        w=rng.uniform(20, 80),
        h=40.0,
        phi=rng.uniform(0, math.pi),
    )
    return rect_polygon(r)


class TestConvexPolygon:
    def test_orientation_normalized(self):
        cw = ConvexPolygon([[0, 0], [0, 1], [1, 1], [1, 0]])
        ccw = ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
        assert np.allclose(sorted(map(tuple, cw.vertices)),
                           sorted(map(tuple, ccw.vertices)))
        assert area(cw) == area(ccw) == 1.0

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            ConvexPolygon([[0, 0], [1, 1]])
        with pytest.raises(ValueError):
            ConvexPolygon([[0, 0], [2, 0], [1, 1], [2, 2], [0, 2], [1, 1.1]])

    def test_collinear_vertex_tolerated(self):
        p = ConvexPolygon([[0, 0], [1, 0], [2, 0], [2, 2], [0, 2]])
        assert area(p) == pytest.approx(4.0)


class TestArea:
    def test_unit_square(self):
        assert area(square(0, 0, 1)) == 1.0

    def test_right_triangle(self):
        assert area(ConvexPolygon([[0, 0], [4, 0], [0, 3]])) == 6.0

    def test_rotation_invariant_rect(self, rng):
        for phi in rng.uniform(0, math.pi, size=20):
            assert area(rect_polygon(RectGrasp(10, 20, 60, 40, phi))) == pytest.approx(2400.0)


class TestIntersect:
    def test_offset_squares(self):
        inter = intersect(square(0, 0, 2), square(1, 1, 2))
        assert inter is not None
        assert area(inter) == pytest.approx(1.0)
        assert np.allclose(sorted(map(tuple, inter.vertices)),
                           [(1, 1), (1, 2), (2, 1), (2, 2)])

    def test_disjoint(self):
        assert intersect(square(0, 0, 1), square(5, 5, 1)) is None

    def test_idempotent(self, rng):
        for _ in range(50):
            p = random_triangle(rng)
            inter = intersect(p, p)
            assert inter is not None
            assert area(inter) == pytest.approx(area(p), abs=1e-9)

    def test_touching_edges_degenerate(self):
        # shared edge only: zero-area intersection reports empty
        assert intersect(square(0, 0, 1), square(1, 0, 1)) is None

    def test_contained(self):
        inner = square(1, 1, 1)
        inter = intersect(square(0, 0, 4), inner)
        assert inter is not None
        assert area(inter) == pytest.approx(1.0)


class TestIou:
    def test_identical(self, rng):
        for _ in range(20):
            p = random_rect(rng)
            assert iou(p, p) == 1.0

    def test_axis_aligned_third(self):
        a = rect_polygon(RectGrasp(0, 0, 4, 2, 0))
        b = rect_polygon(RectGrasp(2, 0, 4, 2, 0))
        assert iou(a, b) == pytest.approx(1.0 / 3.0)

    def test_symmetric_exactly(self, rng):
        for _ in range(100):
            p, q = random_triangle(rng), random_rect(rng)
            assert iou(p, q) == iou(q, p)

    def test_rigid_motion_invariance(self, rng):
        for _ in range(50):
            p, q = random_triangle(rng), random_rect(rng)
            base = iou(p, q)
            phi = rng.uniform(0, 2 * math.pi)
            c, s = math.cos(phi), math.sin(phi)
            rot = np.array([[c, -s], [s, c]])
            shift = rng.uniform(-50, 50, size=2)
            p2 = ConvexPolygon(p.vertices @ rot.T + shift)
            q2 = ConvexPolygon(q.vertices @ rot.T + shift)
            assert abs(iou(p2, q2) - base) < 1e-9

    def test_matches_raster_oracle(self, rng):
        # the acceptance version runs 200 pairs; keep a quick sample here
        for _ in range(40):
            p, q = random_triangle(rng), random_rect(rng)
            assert abs(iou(p, q) - raster_iou_oracle(p, q, 0.25)) <= 0.01


class TestRasterOracle:
    def test_identical_unit_squares(self):
        assert raster_iou_oracle(square(0, 0, 1), square(0, 0, 1), 0.1) == 1.0

    def test_disjoint(self):
        assert raster_iou_oracle(square(0, 0, 1), square(5, 5, 1), 0.1) == 0.0

    def test_refinement_converges_to_clipping(self, rng):
        for _ in range(10):
            p, q = random_triangle(rng), random_rect(rng)
            exact = iou(p, q)
            errs = [abs(raster_iou_oracle(p, q, step) - exact)
                    for step in (2.0, 1.0, 0.5, 0.25)]
            assert errs[-1] <= errs[0] + 1e-12
            assert errs[-1] <= 0.01

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            raster_iou_oracle(square(0, 0, 1), square(0, 0, 1), 0.0)


class TestTriangleVsRectangleSensitivity:
    def test_perpendicular_offset_penalizes_triangles_more(self, rng):
        # a d/4 sideways miss hurts triangle IOU more than rectangle IOU
        for _ in range(25):
            g = TriangleGrasp(
                x=rng.uniform(40, 80), y=rng.uniform(40, 80),
                omega=rng.uniform(25, 80), theta=rng.uniform(0, 2 * math.pi),
            )
            offset = g.d / 4.0
            dx = math.sin(g.theta) * offset
            dy = math.cos(g.theta) * offset
            tri, tri_shift = triangle_polygon(g), triangle_polygon(g).translated(dx, dy)
            rect = rect_polygon(RectGrasp(g.x, g.y, g.omega, g.d, g.theta))
            rect_shift = rect.translated(dx, dy)
            assert iou(tri, tri_shift) < iou(rect, rect_shift)
