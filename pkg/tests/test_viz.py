import numpy as np
import pytest

from trigrasp.decode import ScoredGrasp
from trigrasp.grasp import TriangleGrasp, vertices
from trigrasp.viz import APEX_COLOR, BASE_COLOR, render_overlay


def blank(h=64, w=64, shade=30):
    return np.full((h, w, 3), shade, np.uint8)


def test_no_grasps_keeps_pixels():
    image = blank()
    out = render_overlay(image, [])
    assert (out == image).all()


def test_edges_hit_vertex_endpoints():
    g = TriangleGrasp(32, 32, 24, 0.0, 20)  # axis-aligned: all vertices integral
    out = render_overlay(blank(), [ScoredGrasp(g, 0.9)])
    apex, base_1, base_2 = vertices(g)
    assert tuple(out[int(apex[1]), int(apex[0])]) == APEX_COLOR
    assert tuple(out[int(base_1[1]), int(base_1[0])]) == BASE_COLOR
    assert tuple(out[int(base_2[1]), int(base_2[0])]) == BASE_COLOR


def test_deterministic_png(tmp_path):
    g = TriangleGrasp(30, 30, 20, 1.1, 18)
    p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
    render_overlay(blank(), [ScoredGrasp(g, 0.7)], out=p1)
    render_overlay(blank(), [ScoredGrasp(g, 0.7)], out=p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_out_of_frame_grasp_clipped_not_fatal():
    g = TriangleGrasp(70, 70, 40, 0.5, 40)  # partially outside a 64x64 canvas
    out = render_overlay(blank(), [ScoredGrasp(g, 0.5)])
    assert out.shape == (64, 64, 3)


def test_rejects_non_rgb():
    with pytest.raises(ValueError):
        render_overlay(np.zeros((8, 8), np.uint8), [])
