"""Objective quality metrics."""
from __future__ import annotations

import math

import numpy as np

from .frame_model import Frame

LOSSLESS = math.inf  # PSNR reported for identical planes


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(((a - b) ** 2).mean())


def psnr_plane(a, b, bit_depth: int = 8) -> float:
    m = mse(a, b)
    if m == 0:
        return LOSSLESS
    peak = (1 << bit_depth) - 1
    return 10.0 * math.log10(peak * peak / m)


def psnr(a: Frame, b: Frame) -> dict[str, float]:
    """PSNR per plane plus a combined value over all samples."""
    if a.bit_depth != b.bit_depth or a.format != b.format:
        raise ValueError("frames differ in bit depth or format")
    names = ("y", "u", "v")
    out, tot_se, tot_n = {}, 0.0, 0
    for name, pa, pb in zip(names, a.planes, b.planes):
        if pa.samples.shape != pb.samples.shape:
            raise ValueError(f"plane {name} shape mismatch")
        out[name] = psnr_plane(pa.samples, pb.samples, a.bit_depth)
        tot_se += mse(pa.samples, pb.samples) * pa.samples.size
        tot_n += pa.samples.size
    peak = (1 << a.bit_depth) - 1
    out["all"] = LOSSLESS if tot_se == 0 else 10.0 * math.log10(peak * peak * tot_n / tot_se)
    return out


def json_db(v: float):
    """JSON-safe PSNR: the lossless marker becomes the string "inf"."""
    return "inf" if math.isinf(v) else round(v, 4)
