"""Stand-alone reader/writer for the GMAP tensor-map wire format.

The trainer talks to the toolkit exclusively through files, so this is an
independent implementation of the same contract: 22-byte little-endian
header (magic "GMAP", version u8, kind u8, k/C/H/W u32) followed by
C*H*W float32 in channel-major order.  Labels carry 1+k+1 channels
(confidence, angle bins, width), predictions 2+k+1 (not-graspable,
graspable, angle bins, width).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"GMAP"
VERSION = 1
KIND_LABEL = 0
KIND_PREDICTION = 1

_HEADER = struct.Struct("<4sBBIIII")


class GmapFormatError(ValueError):
    pass


def read_label(path) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Read a label file -> (k, confidence HxW, angle kxHxW, width HxW)."""
    kind, k, data = _read(path)
    if kind != KIND_LABEL:
        raise GmapFormatError(f"{path}: expected a label GMAP")
    return k, data[0], data[1:1 + k], data[1 + k]


def write_prediction(path, conf: np.ndarray, angle: np.ndarray,
                     width: np.ndarray) -> None:
    """Write prediction planes: conf (2,H,W), angle (k,H,W), width (H,W)."""
    k, h, w = angle.shape
    data = np.concatenate([conf, angle, width[None]], axis=0)
    data = np.ascontiguousarray(data, dtype="<f4")
    header = _HEADER.pack(MAGIC, VERSION, KIND_PREDICTION, k, 2 + k + 1, h, w)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def _read(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise GmapFormatError(f"{path}: shorter than the header")
    magic, version, kind, k, c, h, w = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise GmapFormatError(f"{path}: bad magic or version")
    payload = raw[_HEADER.size:]
    if len(payload) != c * h * w * 4:
        raise GmapFormatError(f"{path}: payload size mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(c, h, w)
    if not np.all(np.isfinite(data)):
        raise GmapFormatError(f"{path}: non-finite payload")
    return kind, k, data.copy()
