"""Scalar quantisation, step-size tables and QP composition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QP_MAX = 255
SB_DELTA_RES = (1, 2, 4, 8)


def _make_table(start: float, slope: float, end: int, knee: float) -> np.ndarray:
    """Monotone step table: near-linear at low QP, geometric growth at the top."""
    q = np.arange(QP_MAX + 1, dtype=np.float64)
    # lin + c * (exp(q / knee) - 1), with c chosen so that q=255 lands on `end`
    lin = start + slope * q
    c = (end - lin[-1]) / (np.exp(QP_MAX / knee) - 1.0)
    t = np.round(lin + c * (np.exp(q / knee) - 1.0)).astype(np.int64)
    for i in range(2, len(t)):
        t[i] = max(t[i], t[i - 1] + 1)
    t[0] = 1  # lossless
    return t


DC_STEP_8BIT = _make_table(3.0, 0.8, 1336, 60.0)
AC_STEP_8BIT = _make_table(4.0, 1.0, 1828, 52.0)


def step_size(qp: int, band: str, bit_depth: int = 8) -> int:
    if not 0 <= qp <= QP_MAX:
        raise ValueError(f"qp {qp} out of range")
    table = DC_STEP_8BIT if band == "DC" else AC_STEP_8BIT
    if qp == 0:
        return 1
    return int(table[qp]) << (bit_depth - 8)


def quantize(coeff, qp: int, band: str = "AC", bit_depth: int = 8):
    """Round-to-nearest uniform quantiser; returns integer indices."""
    d = step_size(qp, band, bit_depth)
    c = np.asarray(coeff, dtype=np.int64)
    return np.sign(c) * ((np.abs(c) + d // 2) // d)


def dequantize(index, qp: int, band: str = "AC", bit_depth: int = 8):
    return np.asarray(index, dtype=np.int64) * step_size(qp, band, bit_depth)


def quantize_block(coeffs: np.ndarray, qp_dc: int, qp_ac: int, bit_depth: int = 8) -> np.ndarray:
    out = quantize(coeffs, qp_ac, "AC", bit_depth)
    out[..., 0, 0] = quantize(coeffs[..., 0, 0], qp_dc, "DC", bit_depth)
    return out


def dequantize_block(levels: np.ndarray, qp_dc: int, qp_ac: int, bit_depth: int = 8) -> np.ndarray:
    out = dequantize(levels, qp_ac, "AC", bit_depth)
    out[..., 0, 0] = dequantize(levels[..., 0, 0], qp_dc, "DC", bit_depth)
    return out


@dataclass(frozen=True)
class QuantParams:
    base_qp: int
    delta_y_dc: int = 0
    delta_u_dc: int = 0
    delta_u_ac: int = 0
    delta_v_dc: int = 0
    delta_v_ac: int = 0
    delta_sb: int = 0
    delta_seg: int = 0
    sb_delta_res: int = 1

    def __post_init__(self):
        if not 0 <= self.base_qp <= QP_MAX:
            raise ValueError("base_qp out of range")
        if self.sb_delta_res not in SB_DELTA_RES:
            raise ValueError("superblock delta resolution must be 1, 2, 4 or 8")
        if self.delta_sb % self.sb_delta_res:
            raise ValueError("superblock delta not a multiple of its resolution")

    @property
    def lossless(self) -> bool:
        return self.base_qp == 0 and not any(
            (self.delta_y_dc, self.delta_u_dc, self.delta_u_ac, self.delta_v_dc,
             self.delta_v_ac, self.delta_sb, self.delta_seg))


def effective_qp(p: QuantParams) -> dict[str, int]:
    """Per plane/band QP: frame-level offsets first, then superblock and segment clipping."""
    frame = {
        "Y_DC": p.base_qp + p.delta_y_dc,
        "Y_AC": p.base_qp,
        "U_DC": p.base_qp + p.delta_u_dc,
        "U_AC": p.base_qp + p.delta_u_ac,
        "V_DC": p.base_qp + p.delta_v_dc,
        "V_AC": p.base_qp + p.delta_v_ac,
    }
    if p.lossless:
        return {k: 0 for k in frame}
    return {k: int(np.clip(v + p.delta_sb + p.delta_seg, 1, QP_MAX)) for k, v in frame.items()}
