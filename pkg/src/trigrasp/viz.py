"""PNG overlays of grasp triangles for figures and eyeballing results.

The base edge (two-finger side) and the two apex edges (single-finger
side) get different colors so the gripper orientation is visible.
Rendering is deterministic: the same inputs always produce byte-identical
PNG files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .decode import ScoredGrasp
from .grasp import vertices

APEX_COLOR = (0, 220, 60)
BASE_COLOR = (230, 40, 40)


def render_overlay(image: np.ndarray, grasps: list[ScoredGrasp], out=None) -> np.ndarray:
    """Draw triangle edges over an RGB image; optionally write a PNG.

    Grasps partially outside the canvas are clipped by the rasterizer.
    With no grasps the output pixels equal the input.
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {image.shape}")
    canvas = Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8))
    draw = ImageDraw.Draw(canvas)
    for scored in grasps:
        apex, base_1, base_2 = (tuple(v) for v in vertices(scored.grasp))
        draw.line([apex, base_1], fill=APEX_COLOR, width=2)
        draw.line([apex, base_2], fill=APEX_COLOR, width=2)
        draw.line([base_1, base_2], fill=BASE_COLOR, width=2)
    result = np.asarray(canvas)
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        canvas.save(out, format="PNG")
    return result
