"""trigrasp: oriented base-fixed triangle grasp toolkit."""

from .geometry import ConvexPolygon, area, intersect, iou, raster_iou_oracle
from .grasp import (
    AngleCodec,
    CameraModel,
    GraspPose7D,
    RectGrasp,
    TriangleGrasp,
    decode_angle,
    encode_angle,
    project_7d,
    scale_width,
    to_rect,
    unscale_width,
    vertices,
)

__version__ = "0.1.0"

__all__ = [
    "AngleCodec",
    "CameraModel",
    "ConvexPolygon",
    "GraspPose7D",
    "RectGrasp",
    "TriangleGrasp",
    "area",
    "decode_angle",
    "encode_angle",
    "intersect",
    "iou",
    "project_7d",
    "raster_iou_oracle",
    "scale_width",
    "to_rect",
    "unscale_width",
    "vertices",
]
