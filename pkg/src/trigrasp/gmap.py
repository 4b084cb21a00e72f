"""GMAP: the binary tensor-map file exchanged between pipeline stages.

Fixed little-endian layout, 22-byte header followed by the raw payload:

    offset  size  field
    0       4     magic  b"GMAP"
    4       1     version (u8, currently 1)
    5       1     kind    (u8: 0 = label, 1 = prediction)
    6       4     k       (u32, angle bin count)
    10      4     C       (u32, channel count)
    14      4     H       (u32)
    18      4     W       (u32)
    22      -     C*H*W float32, channel-major (c, h, w) order

Channel layouts are fixed by kind:

    label       C = 1 + k + 1   [confidence, k angle bins, width]
    prediction  C = 2 + k + 1   [not-graspable, graspable, k angle bins, width]

Values are stored post-activation (probabilities / normalized widths),
never logits.  Non-finite payloads are rejected on read.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"GMAP"
VERSION = 1

KIND_LABEL = "label"
KIND_PREDICTION = "prediction"
_KIND_CODE = {KIND_LABEL: 0, KIND_PREDICTION: 1}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}

_HEADER = struct.Struct("<4sBBIIII")
HEADER_SIZE = _HEADER.size  # 22 bytes

#: Per-pixel |p(graspable) + p(not graspable) - 1| above this is flagged.
CONF_SUM_TOL = 1e-4


class GmapError(ValueError):
    """Malformed or inconsistent GMAP file."""


@dataclass(frozen=True)
class GmapHeader:
    kind: str
    k: int
    height: int
    width: int

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise GmapError(f"unknown kind {self.kind!r}")
        if self.k < 1 or self.height < 1 or self.width < 1:
            raise GmapError("k, height and width must all be >= 1")

    @property
    def channels(self) -> int:
        base = 2 if self.kind == KIND_PREDICTION else 1
        return base + self.k + 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.channels, self.height, self.width)


def write_gmap(path, header: GmapHeader, data: np.ndarray) -> None:
    """Write one tensor map; ``data`` must have shape (C, H, W)."""
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.shape != header.shape:
        raise GmapError(f"data shape {arr.shape} != header shape {header.shape}")
    packed = _HEADER.pack(
        MAGIC, VERSION, _KIND_CODE[header.kind],
        header.k, header.channels, header.height, header.width,
    )
    with open(path, "wb") as fh:
        fh.write(packed)
        fh.write(arr.tobytes())


def read_gmap(path) -> tuple[GmapHeader, np.ndarray]:
    """Read a tensor map back; strict inverse of :func:`write_gmap`."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise GmapError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, version, kind_code, k, c, h, w = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise GmapError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise GmapError(f"{path}: unsupported version {version}")
    if kind_code not in _KIND_NAME:
        raise GmapError(f"{path}: unknown kind code {kind_code}")
    header = GmapHeader(kind=_KIND_NAME[kind_code], k=k, height=h, width=w)
    if c != header.channels:
        raise GmapError(
            f"{path}: channel count {c} inconsistent with kind={header.kind}, k={k} "
            f"(expected {header.channels})"
        )
    expected = header.channels * h * w * 4
    payload = raw[HEADER_SIZE:]
    if len(payload) != expected:
        raise GmapError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(header.shape)
    if not np.all(np.isfinite(data)):
        raise GmapError(f"{path}: payload contains non-finite values")
    return header, data.copy()


def validate_gmap(path) -> dict:
    """Structural + semantic check of one file; returns a JSON-able report.

    Prediction maps additionally get the per-pixel confidence-normalization
    check (graspable + not-graspable must sum to 1 within CONF_SUM_TOL).
    """
    report: dict = {"path": str(path), "valid": False}
    try:
        header, data = read_gmap(path)
    except (OSError, GmapError) as exc:
        report["error"] = str(exc)
        return report
    report.update(kind=header.kind, k=header.k,
                  shape=[header.channels, header.height, header.width])
    problems = []
    if header.kind == KIND_PREDICTION:
        sum_err = float(np.abs(data[0] + data[1] - 1.0).max())
        report["max_confidence_sum_error"] = sum_err
        if sum_err > CONF_SUM_TOL:
            problems.append(
                f"per-pixel confidence sums deviate from 1 by up to {sum_err:g}"
            )
        width_plane = data[2 + header.k]
    else:
        conf = data[0]
        if not np.all((conf == 0.0) | (conf == 1.0)):
            problems.append("label confidence plane is not binary")
        angle = data[1:1 + header.k]
        off = conf == 0.0
        if np.any(angle[:, off] != 0.0) or np.any(data[1 + header.k][off] != 0.0):
            problems.append("angle/width nonzero outside labelled regions")
        on = ~off
        if np.any(on) and np.any(angle[:, on].max(axis=0) <= 0.0):
            problems.append("labelled pixels with no hot angle bin")
        width_plane = data[1 + header.k]
    if width_plane.min() < 0.0 or width_plane.max() >= 1.0:
        problems.append("width plane outside [0, 1)")
    report["problems"] = problems
    report["valid"] = not problems
    return report


def validate_report_json(path) -> str:
    return json.dumps(validate_gmap(path), indent=2, sort_keys=True)
