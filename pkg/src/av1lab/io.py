"""Raw and y4m video file reading and writing."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .frame_model import SUBSAMPLING, Frame

_Y4M_MAGIC = b"YUV4MPEG2"
_Y4M_COLOR = {
    "420jpeg": ("420", 8), "420paldv": ("420", 8), "420mpeg2": ("420", 8), "420": ("420", 8),
    "422": ("422", 8), "444": ("444", 8), "mono": ("400", 8),
    "420p10": ("420", 10), "422p10": ("422", 10), "444p10": ("444", 10), "mono10": ("400", 10),
    "420p12": ("420", 12), "422p12": ("422", 12), "444p12": ("444", 12), "mono12": ("400", 12),
}


def plane_shapes(width: int, height: int, format: str) -> list[tuple[int, int]]:
    ss = SUBSAMPLING[format]
    if ss is None:
        return [(height, width)]
    sx, sy = ss
    c = ((height + sy) >> sy, (width + sx) >> sx)
    return [(height, width), c, c]


def _frame_bytes(shapes, bit_depth: int) -> int:
    return sum(h * w for h, w in shapes) * (1 if bit_depth == 8 else 2)


def _decode_frame(buf: bytes, shapes, bit_depth: int, format: str) -> Frame:
    dt = np.uint8 if bit_depth == 8 else np.dtype("<u2")
    arr = np.frombuffer(buf, dtype=dt)
    planes, off = [], 0
    for h, w in shapes:
        planes.append(arr[off:off + h * w].reshape(h, w).astype(np.int32))
        off += h * w
    return Frame.from_arrays(*planes, bit_depth=bit_depth, format=format)


def _encode_frame(frame: Frame) -> bytes:
    dt = np.uint8 if frame.bit_depth == 8 else np.dtype("<u2")
    return b"".join(p.samples.astype(dt).tobytes() for p in frame.planes)


def load_raw(path, width: int, height: int, format: str = "420", bit_depth: int = 8) -> list[Frame]:
    """Planar frames back to back; depths above 8 use little-endian 16-bit containers."""
    data = Path(path).read_bytes()
    shapes = plane_shapes(width, height, format)
    n = _frame_bytes(shapes, bit_depth)
    if n == 0 or len(data) % n:
        raise ValueError(f"raw file size {len(data)} is not a multiple of the frame size {n}")
    return [_decode_frame(data[i:i + n], shapes, bit_depth, format) for i in range(0, len(data), n)]


def write_raw(path, frames: list[Frame]) -> None:
    Path(path).write_bytes(b"".join(_encode_frame(f) for f in frames))


def parse_y4m(data: bytes) -> tuple[dict, list[Frame]]:
    nl = data.find(b"\n")
    if nl < 0 or not data.startswith(_Y4M_MAGIC):
        raise ValueError("not a y4m stream")
    tags = data[len(_Y4M_MAGIC):nl].split()
    hdr = {"C": "420jpeg", "F": "30:1"}
    for t in tags:
        hdr[chr(t[0])] = t[1:].decode("ascii")
    try:
        width, height = int(hdr["W"]), int(hdr["H"])
    except (KeyError, ValueError):
        raise ValueError("y4m header lacks valid W/H") from None
    if hdr["C"] not in _Y4M_COLOR:
        raise ValueError(f"unsupported y4m colour space {hdr['C']}")
    format, depth = _Y4M_COLOR[hdr["C"]]
    shapes = plane_shapes(width, height, format)
    n = _frame_bytes(shapes, depth)
    frames, pos = [], nl + 1
    while pos < len(data):
        end = data.find(b"\n", pos)
        if end < 0 or not data.startswith(b"FRAME", pos):
            raise ValueError("malformed FRAME marker")
        body = data[end + 1:end + 1 + n]
        if len(body) != n:
            raise ValueError("truncated y4m frame")
        frames.append(_decode_frame(body, shapes, depth, format))
        pos = end + 1 + n
    meta = {"width": width, "height": height, "format": format, "bit_depth": depth, "fps": hdr["F"]}
    return meta, frames


def load_y4m(path) -> list[Frame]:
    return parse_y4m(Path(path).read_bytes())[1]


def y4m_bytes(frames: list[Frame], fps: str = "30:1") -> bytes:
    f0 = frames[0]
    tag = {"400": "mono", "420": "420", "422": "422", "444": "444"}[f0.format]
    if f0.bit_depth > 8:
        tag += f"p{f0.bit_depth}" if f0.format != "400" else str(f0.bit_depth)
    elif f0.format == "420":
        tag = "420jpeg"
    head = f"YUV4MPEG2 W{f0.width} H{f0.height} F{fps} Ip A1:1 C{tag}\n".encode("ascii")
    return head + b"".join(b"FRAME\n" + _encode_frame(f) for f in frames)


def write_y4m(path, frames: list[Frame], fps: str = "30:1") -> None:
    Path(path).write_bytes(y4m_bytes(frames, fps))
